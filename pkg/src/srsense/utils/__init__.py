"""Signal models, the SR filter, spectral measurement and detectors."""

from srsense.utils.seeding import SeedPath
from srsense.utils.result_table import ResultTable

__all__ = [
    "SeedPath",
    "ResultTable",
]
