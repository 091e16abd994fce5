"""
Noise-level tuning of the SR filter.

The objective at a noise intensity D is the narrowband SNR gain at the drive
frequency: SNR of the SR output minus SNR of the noisy drive, both measured
on Welch PSDs pooled over Monte Carlo trials. Trial seeds do not depend on
D, so every D sees the same random numbers.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np
import pandas as pd
from tqdm import tqdm

from srsense.utils.exceptions import (
    InputValidationError,
    IntegratorDivergenceError,
    OptimizationError,
)
from srsense.utils.montecarlo import run_indexed
from srsense.utils.seeding import SeedPath
from srsense.utils.signal import NoiseSpec, SampleStream, ToneSpec
from srsense.utils.signal import gen_awgn, gen_sinusoid
from srsense.utils.spectral import (
    PsdEstimate,
    average_psd,
    snr_at_frequency,
    welch_psd,
)
from srsense.utils.srfilter import (
    IntegratorConfig,
    SRParams,
    filter_stream,
    noise_variance_for_intensity,
)

LOG = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2

NOISE_ENTRIES = ("drive", "internal")


@dataclass(frozen=True)
class SweepConfig:
    """
    How one noise intensity is evaluated.

    noise_entry "drive" adds channel noise of intensity D to the drive that
    the filter sees; "internal" feeds the clean tone and injects D inside
    the integrator. Either way the input SNR is measured on the noisy drive.
    """

    samples: int = 4096
    nfft: int = 256
    overlap_fraction: float = 0.5
    sample_rate_hz: float = 100.0
    substeps_per_sample: int = 20
    sample_period: float | None = 1.0
    discard_transient: int = 256
    signal_halfwidth_bins: int = 2
    guard_bins: int = 3
    noise_entry: str = "internal"

    def __post_init__(self):
        if self.noise_entry not in NOISE_ENTRIES:
            raise InputValidationError(
                f"noise entry must be one of {NOISE_ENTRIES}: "
                f"{self.noise_entry!r}"
            )
        if self.samples < self.nfft:
            raise InputValidationError(
                f"{self.samples} samples do not fill nfft={self.nfft}"
            )

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig.for_stream(
            self.sample_rate_hz,
            substeps_per_sample=self.substeps_per_sample,
            sample_period=self.sample_period,
            discard_transient=self.discard_transient,
        )

    @property
    def period(self) -> float:
        if self.sample_period is None:
            return 1.0 / self.sample_rate_hz
        return self.sample_period


@dataclass(frozen=True)
class GainPoint:
    noise_d: float
    input_snr_db: float
    output_snr_db: float
    gain_db: float


@dataclass(frozen=True)
class GainCurve:
    points: tuple[GainPoint, ...]
    trials_per_point: int

    def __post_init__(self):
        ds = [pt.noise_d for pt in self.points]
        if ds != sorted(ds):
            raise InputValidationError("gain curve must be sorted by D")

    def best(self) -> GainPoint:
        return max(self.points, key=lambda pt: pt.gain_db)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                (pt.noise_d, pt.input_snr_db, pt.output_snr_db, pt.gain_db)
                for pt in self.points
            ],
            columns=["noise_d", "input_snr_db", "output_snr_db", "gain_db"],
        )


@dataclass(frozen=True)
class TuneTraceEntry:
    step: int
    stage: str
    noise_d: float
    gain_db: float


@dataclass(frozen=True)
class TuneResult:
    d_opt: float
    gain_at_opt_db: float
    curve: GainCurve
    trace: tuple[TuneTraceEntry, ...] = field(default=())

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(e.step, e.stage, e.noise_d, e.gain_db) for e in self.trace],
            columns=["step", "stage", "noise_d", "gain_db"],
        )


# region Objective
def drive_and_output_psds(
    index: int,
    p: SRParams,
    tone: ToneSpec,
    noise_d: float,
    seed: SeedPath,
    sweep: SweepConfig,
) -> tuple[PsdEstimate, PsdEstimate]:
    """Welch PSDs of the noisy drive and of the SR output for one trial."""
    trial = seed.child(index)
    fs = sweep.sample_rate_hz
    n = sweep.samples + sweep.discard_transient
    variance = noise_variance_for_intensity(noise_d, sweep.period)
    clean = gen_sinusoid(tone, n, fs)
    noise = gen_awgn(NoiseSpec(variance, trial.child(0)), n, fs)
    drive = SampleStream(clean.samples + noise.samples, fs)
    integrator = sweep.integrator()
    if sweep.noise_entry == "drive":
        out = filter_stream(drive, p, integrator)
    else:
        internal = integrator.with_noise(noise_d, trial.child(1))
        out = filter_stream(clean, p, internal)
    reference = drive.tail(sweep.discard_transient)
    return (
        welch_psd(reference, sweep.nfft, sweep.overlap_fraction),
        welch_psd(out, sweep.nfft, sweep.overlap_fraction),
    )


def evaluate_gain(
    p: SRParams,
    tone: ToneSpec,
    noise_d: float,
    trials: int,
    seed: SeedPath,
    sweep: SweepConfig = SweepConfig(),
    workers: int = 1,
) -> GainPoint:
    """Monte Carlo SNR gain at one noise intensity."""
    worker = partial(
        drive_and_output_psds,
        p=p,
        tone=tone,
        noise_d=noise_d,
        seed=seed,
        sweep=sweep,
    )
    try:
        pairs = run_indexed(worker, list(range(trials)), workers=workers)
    except IntegratorDivergenceError as err:
        raise err.with_noise(noise_d) from err
    psd_in = average_psd([pair[0] for pair in pairs])
    psd_out = average_psd([pair[1] for pair in pairs])
    kwargs = dict(
        signal_halfwidth_bins=sweep.signal_halfwidth_bins,
        guard_bins=sweep.guard_bins,
    )
    snr_in = snr_at_frequency(psd_in, tone.freq_hz, **kwargs)
    snr_out = snr_at_frequency(psd_out, tone.freq_hz, **kwargs)
    gain = snr_out - snr_in
    # both SNRs at -inf (silent drive and output) carry no gain
    if math.isnan(gain):
        gain = -math.inf
    return GainPoint(noise_d, snr_in, snr_out, gain)


# endregion


def sweep_noise(
    p: SRParams,
    tone: ToneSpec,
    d_grid,
    trials: int,
    seed: SeedPath,
    sweep: SweepConfig = SweepConfig(),
    workers: int = 1,
    progress: bool = False,
) -> GainCurve:
    grid = [float(d) for d in d_grid]
    if not grid:
        raise InputValidationError("noise grid is empty")
    if any(d <= 0 for d in grid) or any(
        hi <= lo for lo, hi in zip(grid, grid[1:])
    ):
        raise InputValidationError(
            f"noise grid must be positive and strictly increasing: {grid}"
        )
    if trials < 1:
        raise InputValidationError(f"trials must be >= 1: {trials}")
    points = []
    for d in tqdm(grid, desc="noise sweep", disable=not progress):
        pt = evaluate_gain(p, tone, d, trials, seed, sweep, workers)
        LOG.debug(f"D={d:.4g}: gain {pt.gain_db:.2f} dB")
        points.append(pt)
    return GainCurve(tuple(points), trials)


def optimize_noise(
    p: SRParams,
    tone: ToneSpec,
    d_range: tuple[float, float],
    budget: int,
    trials: int,
    seed: SeedPath,
    sweep: SweepConfig = SweepConfig(),
    grid_points: int = 8,
    objective: Callable[[float], float] | None = None,
    workers: int = 1,
) -> TuneResult:
    """
    Coarse geometric grid over d_range, then golden-section refinement in
    log D around the best grid point with the remaining budget. The best
    evaluated point overall is returned, so a larger budget never does
    worse. `objective` replaces the Monte Carlo gain (test hook).
    """
    d_lo, d_hi = d_range
    if not 0 < d_lo < d_hi:
        raise InputValidationError(f"invalid noise range: {d_range}")
    if budget < 8:
        raise InputValidationError(f"budget must be >= 8: {budget}")
    if not 2 <= grid_points <= budget:
        raise InputValidationError(
            f"grid needs 2 to {budget} points within the budget: {grid_points}"
        )

    trace: list[TuneTraceEntry] = []
    points: dict[float, GainPoint] = {}

    def evaluate(d: float, stage: str) -> float:
        if d in points:
            return points[d].gain_db
        try:
            if objective is not None:
                gain = float(objective(d))
                pt = GainPoint(d, math.nan, math.nan, gain)
            else:
                pt = evaluate_gain(p, tone, d, trials, seed, sweep, workers)
        except IntegratorDivergenceError as err:
            LOG.warning(f"Skipping diverged grid point: {err}")
            pt = GainPoint(d, math.nan, math.nan, -math.inf)
        points[d] = pt
        trace.append(TuneTraceEntry(len(trace) + 1, stage, d, pt.gain_db))
        return pt.gain_db

    grid = np.geomspace(d_lo, d_hi, grid_points)
    gains = [evaluate(float(d), "grid") for d in grid]
    if all(g == -math.inf for g in gains):
        raise OptimizationError(
            f"every grid point in [{d_lo}, {d_hi}] diverged"
        )

    best = int(np.argmax(gains))
    lo = math.log(grid[max(best - 1, 0)])
    hi = math.log(grid[min(best + 1, grid.size - 1)])
    remaining = budget - grid.size
    if remaining >= 2 and hi > lo:
        _golden_max(
            lambda u: evaluate(math.exp(u), "golden"), lo, hi, remaining
        )

    d_opt, pt = max(points.items(), key=lambda kv: kv[1].gain_db)
    curve = GainCurve(
        tuple(points[float(d)] for d in grid),
        trials if objective is None else 0,
    )
    LOG.info(f"Tuned noise intensity D={d_opt:.4g}, gain {pt.gain_db:.2f} dB")
    return TuneResult(d_opt, pt.gain_db, curve, tuple(trace))


def _golden_max(f: Callable[[float], float], a: float, b: float, evals: int):
    """Golden-section search for a maximum using exactly `evals` calls."""
    h = b - a
    c = b - INV_PHI * h
    d = a + INV_PHI * h
    fc, fd = f(c), f(d)
    for _ in range(evals - 2):
        if fc > fd:
            b, d, fd = d, c, fc
            h = INV_PHI * h
            c = b - INV_PHI * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = INV_PHI * h
            d = a + INV_PHI * h
            fd = f(d)
