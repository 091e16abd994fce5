"""
ROC curves of the plain, SR-pretreated and dual energy detectors.

For every SNR, `trials` H0 and `trials` H1 streams are simulated once and
shared by all detectors (paired comparison). Thresholds are swept over the
empirical H0 quantiles, giving evenly spaced false alarm points.
Rows: detector,snr_db,pfa,pd,trials,se_pd
"""

import logging
import math

import numpy as np
import pandas as pd

from srsense.tools.experiment import (
    ExperimentConfig,
    make_table,
    simulate_branch,
)
from srsense.utils.detect import empirical_gamma
from srsense.utils.result_table import ResultTable

LOG = logging.getLogger(__name__)

HEADLINE_PFA = 0.1


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def roc_points(h0: np.ndarray, h1: np.ndarray, pfas) -> list[tuple]:
    """(pfa, pd) at the thresholds that put `pfas` of h0 above gamma."""
    rows = []
    for target in pfas:
        gamma = empirical_gamma(h0, target)
        rows.append((float(np.mean(h0 > gamma)), float(np.mean(h1 > gamma))))
    return rows


def dual_roc_points(
    plain: tuple[np.ndarray, np.ndarray],
    sr: tuple[np.ndarray, np.ndarray],
    pfas,
) -> list[tuple]:
    """OR-rule ROC with each branch at half the false alarm target."""
    rows = []
    for target in pfas:
        gp = empirical_gamma(plain[0], target / 2)
        gs = empirical_gamma(sr[0], target / 2)
        h0 = (plain[0] > gp) | (sr[0] > gs)
        h1 = (plain[1] > gp) | (sr[1] > gs)
        rows.append((float(h0.mean()), float(h1.mean())))
    return rows


def run_roc(
    cfg: ExperimentConfig, workers: int = 1, progress: bool = False
) -> ResultTable:
    trials = cfg.experiment.trials
    pfas = np.linspace(0.0, 1.0, cfg.roc.points)
    wanted = cfg.roc.detectors
    branches = [
        name
        for name in ("plain", "sr")
        if name in wanted or "dual" in wanted
    ]
    base = cfg.base_seed()
    rows = []
    for g, snr_db in enumerate(cfg.channel.snr_db):
        variance = cfg.variance_for(snr_db)
        metrics = {}
        for name in branches:
            h0 = simulate_branch(
                cfg,
                name,
                variance,
                base.child(g, 0),
                workers=workers,
                progress=progress,
            )
            h1 = simulate_branch(
                cfg,
                name,
                variance,
                base.child(g, 1),
                tone=cfg.h1_tone(),
                workers=workers,
                progress=progress,
            )
            metrics[name] = (h0, h1)
        curves = {
            name: roc_points(*metrics[name], pfas)
            for name in ("plain", "sr")
            if name in wanted
        }
        if "dual" in wanted:
            curves["dual"] = dual_roc_points(
                metrics["plain"], metrics["sr"], pfas
            )
        for name in wanted:
            for pfa, pd_ in curves[name]:
                rows.append(
                    (name, snr_db, pfa, pd_, trials, binomial_se(pd_, trials))
                )
        if "plain" in curves and "sr" in curves:
            _log_headline(snr_db, curves, pfas, trials)
    frame = pd.DataFrame(
        rows, columns=["detector", "snr_db", "pfa", "pd", "trials", "se_pd"]
    )
    return make_table(cfg, frame)


def _log_headline(snr_db, curves, pfas, trials) -> None:
    i = int(np.argmin(np.abs(pfas - HEADLINE_PFA)))
    pd_plain = curves["plain"][i][1]
    pd_sr = curves["sr"][i][1]
    se = math.hypot(binomial_se(pd_plain, trials), binomial_se(pd_sr, trials))
    z = (pd_sr - pd_plain) / se if se > 0 else 0.0
    LOG.info(
        f"SNR {snr_db:g} dB, Pfa {pfas[i]:.2f}: Pd(sr) {pd_sr:.3f} vs "
        f"Pd(plain) {pd_plain:.3f} (difference {z:+.1f} standard errors)"
    )
