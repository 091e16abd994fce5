"""
Noise-level tuning run.

Rows: step,stage,noise_d,gain_db for every objective evaluation (stage
"grid" or "golden"), then one "optimum" row with the returned D.
"""

import logging
import math

import pandas as pd

from srsense.tools.experiment import ExperimentConfig, make_table
from srsense.utils.result_table import ResultTable
from srsense.utils.tuning import optimize_noise

LOG = logging.getLogger(__name__)


def surrogate_gain(optimum: float):
    """Unimodal analytic gain in dB, peaking at `optimum`."""

    def gain(noise_d: float) -> float:
        return 6.0 - 10.0 * math.log(noise_d / optimum) ** 2

    return gain


def run_tune(
    cfg: ExperimentConfig, workers: int = 1, progress: bool = False
) -> ResultTable:
    tune = cfg.tune
    objective = None
    if tune.surrogate_optimum is not None:
        LOG.info(
            f"Using surrogate objective peaking at "
            f"D={tune.surrogate_optimum:g}"
        )
        objective = surrogate_gain(tune.surrogate_optimum)
    result = optimize_noise(
        cfg.params,
        cfg.tone_spec(),
        (tune.d_lo, tune.d_hi),
        budget=tune.budget,
        trials=cfg.experiment.trials,
        seed=cfg.base_seed(),
        sweep=cfg.sweep_config(),
        grid_points=tune.grid_points,
        objective=objective,
        workers=workers,
    )
    trace = result.trace_frame()
    optimum = pd.DataFrame(
        [(len(trace) + 1, "optimum", result.d_opt, result.gain_at_opt_db)],
        columns=trace.columns,
    )
    return make_table(cfg, pd.concat([trace, optimum], ignore_index=True))
