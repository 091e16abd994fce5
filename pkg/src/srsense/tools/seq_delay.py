"""
False alarm rate against detection delay for the sequential detectors.

Each detector runs `trials` H0 streams and `trials` H1 streams (signal present
from the first window) over a fixed horizon of FFT windows. One m(n)
trajectory per stream serves every threshold. A false alarm is any alarm
within the horizon under H0; a missed detection counts as horizon + 1
windows of delay and is also reported as miss_rate.
Rows: detector,gamma,pfa,mean_delay_windows,miss_rate,trials
"""

import logging
import math
from functools import partial

import numpy as np
import pandas as pd

from srsense.tools.experiment import ExperimentConfig, make_table
from srsense.utils.detect import (
    BlockDetectorConfig,
    estimate_e0,
    first_alarm,
    seq_run,
    threshold_from_samples,
    trial_stream,
)
from srsense.utils.montecarlo import run_indexed
from srsense.utils.result_table import ResultTable
from srsense.utils.seeding import SeedPath
from srsense.utils.signal import NoiseSpec, ToneSpec

LOG = logging.getLogger(__name__)

E0, NULL, SIGNAL = 0, 1, 2


def _trajectory(
    index: int,
    det: BlockDetectorConfig,
    tone: ToneSpec | None,
    variance: float,
    e0: float,
    seed: SeedPath,
    n: int,
) -> np.ndarray:
    trial = seed.child(index)
    stream = trial_stream(det, tone, variance, trial, n)
    return seq_run(stream, det, e0, math.inf, trial.child(1)).trajectory


def trajectories(
    det: BlockDetectorConfig,
    tone: ToneSpec | None,
    variance: float,
    e0: float,
    trials: int,
    seed: SeedPath,
    horizon: int,
    workers: int = 1,
    progress: bool = False,
) -> list[np.ndarray]:
    n = horizon * det.nfft + det.transient
    worker = partial(
        _trajectory,
        det=det,
        tone=tone,
        variance=variance,
        e0=e0,
        seed=seed,
        n=n,
    )
    return run_indexed(
        worker,
        list(range(trials)),
        workers=workers,
        progress=progress,
        desc=f"{det.label} sequential",
    )


def delay_stats(
    h0: list[np.ndarray], h1: list[np.ndarray], gamma: float, horizon: int
) -> tuple[float, float, float]:
    """(false alarm rate, mean delay in windows, miss rate) at gamma."""
    pfa = float(np.mean([first_alarm(m, gamma) is not None for m in h0]))
    alarms = [first_alarm(m, gamma) for m in h1]
    delays = [horizon + 1 if a is None else a for a in alarms]
    miss = float(np.mean([a is None for a in alarms]))
    return pfa, float(np.mean(delays)), miss


def run_seq_delay(
    cfg: ExperimentConfig, workers: int = 1, progress: bool = False
) -> ResultTable:
    section = cfg.seqdelay
    trials = cfg.experiment.trials
    variance = cfg.variance_for(section.snr_db)
    base = cfg.base_seed()
    rows = []
    for d, name in enumerate(section.detectors):
        det = cfg.detector(name, variance)
        seed = base.child(d)
        e0 = estimate_e0(
            det,
            NoiseSpec(variance, seed.child(E0)),
            section.e0_trials,
            section.margin_factor,
            seed.child(E0),
            workers,
        )
        LOG.debug(f"{name}: reference level E0={e0:.6g}")
        runs = partial(
            trajectories,
            det,
            variance=variance,
            e0=e0,
            trials=trials,
            horizon=section.horizon,
            workers=workers,
            progress=progress,
        )
        h0 = runs(None, seed=seed.child(NULL))
        h1 = runs(cfg.h1_tone(), seed=seed.child(SIGNAL))
        gammas = list(section.gammas) or [
            threshold_from_samples([m.max() for m in h0], pfa)
            for pfa in section.target_pfas
        ]
        for gamma in gammas:
            pfa, delay, miss = delay_stats(h0, h1, gamma, section.horizon)
            rows.append((name, gamma, pfa, delay, miss, trials))
            LOG.info(
                f"{name}: gamma={gamma:.4g} Pfa={pfa:.3f} "
                f"mean delay {delay:.2f} windows, miss rate {miss:.3f}"
            )
    frame = pd.DataFrame(
        rows,
        columns=[
            "detector",
            "gamma",
            "pfa",
            "mean_delay_windows",
            "miss_rate",
            "trials",
        ],
    )
    return make_table(cfg, frame)
