import io
from dataclasses import dataclass
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import pandas as pd


def package_version() -> str:
    try:
        return version("srsense")
    except PackageNotFoundError:
        return "0+unknown"


@dataclass(frozen=True, eq=False)
class ResultTable:
    """
    Rows of one experiment plus the metadata needed to rerun it.
    Header lines are written as '# ' comments ahead of the CSV body.
    """

    kind: str
    frame: pd.DataFrame
    master_seed: int
    trials: int
    config_toml: str = ""

    def header_lines(self) -> list[str]:
        lines = [
            f"srsense {package_version()}",
            f"kind = {self.kind}",
            f"master_seed = {self.master_seed}",
            f"trials = {self.trials}",
        ]
        lines += self.config_toml.splitlines()
        return [f"# {line}".rstrip() for line in lines]

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        for line in self.header_lines():
            buf.write(line + "\n")
        self.frame.to_csv(
            buf, index=False, float_format="%.10g", lineterminator="\n"
        )
        return buf.getvalue()

    def write(self, path: str | Path) -> Path:
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv_text())
        return out


def read_result(path: str | Path) -> pd.DataFrame:
    """Load the CSV body of a result file, skipping header comments."""
    return pd.read_csv(path, comment="#")
