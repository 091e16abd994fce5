import logging

from srsense.tools.experiment import ExperimentConfig, make_table
from srsense.utils.result_table import ResultTable
from srsense.utils.tuning import sweep_noise

LOG = logging.getLogger(__name__)


def run_gain_sweep(
    cfg: ExperimentConfig, workers: int = 1, progress: bool = False
) -> ResultTable:
    """Rows: noise_d,input_snr_db,output_snr_db,gain_db"""
    curve = sweep_noise(
        cfg.params,
        cfg.tone_spec(),
        cfg.sweep.grid,
        cfg.experiment.trials,
        cfg.base_seed(),
        cfg.sweep_config(),
        workers=workers,
        progress=progress,
    )
    best = curve.best()
    positive = [pt.noise_d for pt in curve.points if pt.gain_db > 0]
    LOG.info(
        f"Max gain {best.gain_db:.2f} dB at D={best.noise_d:g}; "
        f"{len(positive)} of {len(curve.points)} grid points with positive "
        "gain"
    )
    return make_table(cfg, curve.to_frame())
