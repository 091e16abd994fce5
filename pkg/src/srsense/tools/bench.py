"""
srsense experiment bench.

Runs one seeded Monte Carlo experiment described by a TOML configuration
and writes its result table as CSV (to --out, the configured output path,
or stdout). Exit codes: 0 success, 1 configuration or usage error, 2 runtime
error. SRSENSE_THREADS caps the number of worker processes.

The SR branch discards one FFT window of transient before its sensing
window, so it consumes nfft more raw samples per decision than the plain
detector.
"""

import sys
import logging
import argparse
from pathlib import Path
from typing import Callable, Optional, Sequence

from srsense.api.base_main import BaseMain
from srsense.tools.downconvert import run_downconvert
from srsense.tools.experiment import (
    ExperimentConfig,
    RunSection,
    config_schema,
    load_config,
)
from srsense.tools.gain_sweep import run_gain_sweep
from srsense.tools.pd_window import run_pd_vs_window
from srsense.tools.psd_demo import run_psd_demo
from srsense.tools.roc import run_roc
from srsense.tools.seq_delay import run_seq_delay
from srsense.tools.tune import run_tune
from srsense.utils.exceptions import CalculationNotSupported, ConfigError
from srsense.utils.montecarlo import worker_count
from srsense.utils.result_table import ResultTable

LOG = logging.getLogger(__name__)

Runner = Callable[..., ResultTable]

RUNNERS: dict[str, tuple[Runner, str]] = {
    "psd": (run_psd_demo, "input vs SR-output PSD at a noise level"),
    "gainsweep": (run_gain_sweep, "SNR gain over a grid of noise levels"),
    "tune": (run_tune, "search the noise level maximizing SNR gain"),
    "roc": (run_roc, "ROC curves of plain, SR and dual detectors"),
    "pdwindow": (run_pd_vs_window, "Pd vs sensing window at fixed Pfa"),
    "seqdelay": (run_seq_delay, "sequential false alarm rate vs delay"),
    "downconvert": (run_downconvert, "pilot mixer + low-pass decimation"),
}


def run_experiment(
    cfg: ExperimentConfig, workers: int = 1, progress: bool = False
) -> ResultTable:
    if cfg.kind not in RUNNERS:
        raise CalculationNotSupported(f"unknown experiment kind: {cfg.kind}")
    runner, _ = RUNNERS[cfg.kind]
    LOG.info(
        f"Running {cfg.kind} with {cfg.experiment.trials} trials, "
        f"seed {cfg.experiment.master_seed}, {workers} worker(s)"
    )
    return runner(cfg, workers=workers, progress=progress)


class BenchMain(BaseMain):
    description = __doc__
    config: Optional[ExperimentConfig] = None

    def add_extra_args(self):
        assert self.parser is not None, "Parser not initialized"
        commands = self.parser.add_subparsers(
            dest="kind", metavar="EXPERIMENT", required=True
        )
        for kind, (_, summary) in RUNNERS.items():
            sub = commands.add_parser(
                kind,
                help=summary,
                description=summary,
                epilog=config_schema(kind),
                formatter_class=argparse.RawDescriptionHelpFormatter,
            )
            sub.add_argument(
                "--config", type=Path, help="TOML experiment configuration"
            )
            sub.add_argument(
                "--seed", type=int, help="Override [experiment] master-seed"
            )
            sub.add_argument(
                "--out", type=str, help="Override [experiment] output path"
            )
            sub.add_argument(
                "--trials", type=int, help="Override [experiment] trials"
            )
            sub.add_argument(
                "--workers",
                type=int,
                help="Worker processes (default: SRSENSE_THREADS or CPUs)",
            )

    def before_run(self):
        assert self.args is not None, "Arguments not initialized"
        args = self.args
        if args.workers is not None and args.workers < 0:
            raise ConfigError(f"--workers must be >= 0: {args.workers}")
        if args.config is not None:
            cfg = load_config(args.config)
        else:
            cfg = ExperimentConfig(RunSection())
        self.config = cfg.with_overrides(
            kind=args.kind,
            seed=args.seed,
            trials=args.trials,
            output=args.out,
        ).validate()

    def run(self):
        assert self.args is not None and self.config is not None
        workers = worker_count(self.args.workers)
        table = run_experiment(self.config, workers, self.args.progress)
        output = self.config.experiment.output
        if output:
            path = table.write(output)
            LOG.info(f"Wrote {len(table.frame)} rows to {path}")
        else:
            sys.stdout.write(table.to_csv_text())


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        app = BenchMain(argv)
    except SystemExit as exc:
        if exc.code is None:
            return 0
        return exc.code if isinstance(exc.code, int) else 1
    return app.main()


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
