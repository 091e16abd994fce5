"""
Detection probability against sensing window length at a fixed Pfa.

Per window: calibrate gamma on one H0 set, check the false alarm rate on a
fresh H0 set, and measure Pd on an H1 set. nfft stays fixed, so a longer
window averages more FFT blocks.
Rows: detector,window_samples,pd,pfa_achieved,trials
"""

import logging

import numpy as np
import pandas as pd

from srsense.tools.experiment import (
    ExperimentConfig,
    make_table,
    simulate_branch,
)
from srsense.utils.detect import threshold_for
from srsense.utils.result_table import ResultTable

LOG = logging.getLogger(__name__)

CALIBRATION, VALIDATION, SIGNAL = 0, 1, 2


def run_pd_vs_window(
    cfg: ExperimentConfig, workers: int = 1, progress: bool = False
) -> ResultTable:
    section = cfg.pdwindow
    trials = cfg.experiment.trials
    variance = cfg.variance_for(section.snr_db)
    wanted = section.detectors
    branches = [
        name
        for name in ("plain", "sr")
        if name in wanted or "dual" in wanted
    ]
    base = cfg.base_seed()
    rows = []
    for w, window in enumerate(section.windows):
        decisions = {}
        for name in branches:
            sets = {}
            for stage in (CALIBRATION, VALIDATION, SIGNAL):
                sets[stage] = simulate_branch(
                    cfg,
                    name,
                    variance,
                    base.child(w, stage),
                    tone=cfg.h1_tone() if stage == SIGNAL else None,
                    window=window,
                    workers=workers,
                    progress=progress,
                )
            for target, key in (
                (section.target_pfa, name),
                (section.target_pfa / 2, f"{name}-half"),
            ):
                th = threshold_for(sets[CALIBRATION], target)
                decisions[key] = (
                    sets[VALIDATION] > th.gamma,
                    sets[SIGNAL] > th.gamma,
                )
        if "dual" in wanted:
            plain, sr = decisions["plain-half"], decisions["sr-half"]
            decisions["dual"] = (plain[0] | sr[0], plain[1] | sr[1])
        for name in wanted:
            false_alarms, detections = decisions[name]
            rows.append(
                (
                    name,
                    window,
                    float(np.mean(detections)),
                    float(np.mean(false_alarms)),
                    trials,
                )
            )
        LOG.info(
            f"Window {window}: "
            + ", ".join(
                f"Pd({name}) {np.mean(decisions[name][1]):.3f}"
                for name in wanted
            )
        )
    frame = pd.DataFrame(
        rows,
        columns=[
            "detector",
            "window_samples",
            "pd",
            "pfa_achieved",
            "trials",
        ],
    )
    return make_table(cfg, frame)
