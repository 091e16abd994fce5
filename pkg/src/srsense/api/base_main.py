import sys
import logging
import argparse
from typing import Optional, Sequence

from srsense.utils.exceptions import ConfigError, SrSenseError

LOG = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the configuration error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


class BaseMain(object):
    parser: Optional[ArgumentParser] = None
    args: Optional[argparse.Namespace] = None
    logging_level = logging.INFO
    description: Optional[str] = None

    def __init__(self, argv: Optional[Sequence[str]] = None):
        """
        Initialize argument parsing
        Process any extra arguments
        Initialize Logging configuration
        Only hard codes the shared flags: --verbose and --progress
        Additional arguments can be configured by overwriting the add_extra_args() method
        Logging configuration can be changed by overwritting the config_logging() method
        """
        self.parser = ArgumentParser(
            description=self.description or __doc__,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        self.parser.add_argument(
            "-v",
            "--verbose",
            action="store_true",
            help="Log at DEBUG level",
        )
        self.parser.add_argument(
            "--progress",
            action="store_true",
            help="Show progress bars for Monte Carlo loops",
        )

        self.add_extra_args()

        self.args = self.parser.parse_args(argv)
        if self.args.verbose:
            self.logging_level = logging.DEBUG
        self.config_logging()

    @staticmethod
    def _critical_exit(msg, code: int = EXIT_CONFIG) -> int:
        LOG.error(msg)
        return code

    def main(self) -> int:
        """
        Main function to call to initiate execution.
        1. Call before_run to load and check inputs
        2. Call run to do the actual work
        Configuration problems map to exit code 1, runtime failures to 2.
        """
        try:
            self.before_run()
        except ConfigError as err:
            return self._critical_exit(f"Configuration error: {err}")
        except OSError as err:
            return self._critical_exit(f"Cannot read input: {err}")
        try:
            self.run()
        except ConfigError as err:
            return self._critical_exit(f"Configuration error: {err}")
        except SrSenseError as err:
            return self._critical_exit(f"Run failed: {err}", EXIT_RUNTIME)
        return EXIT_OK

    # Following functions can be overwritten if needed
    # ================================================

    def config_logging(self):
        """
        Overwrite to change the way the logging package is configured
        :return: Nothing
        """
        logging.basicConfig(
            level=self.logging_level,
            format="[%(asctime)-15s] %(levelname)-6s %(message)s",
            datefmt="%d/%b/%Y %H:%M:%S",
        )
        logging.getLogger("srsense").setLevel(self.logging_level)

    def add_extra_args(self):
        """
        Overwrite to change the way extra arguments are added to the parser
        :return: Nothing
        """
        pass

    def before_run(self):
        """
        Overwrite to do work after parsing, but before running
        This is a good place to load configuration and do custom argument checks
        :return: Nothing
        """
        pass

    def run(self):
        """
        This function MUST be overwritten to do actual work
        :return: Nothing
        """
        LOG.warning("No actual work done")
