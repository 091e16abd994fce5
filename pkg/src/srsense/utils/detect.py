"""
Decision layer: block energy detection, threshold calibration, the
CUSUM-like sequential detector and the OR-combined dual detector.

Block metric: M = (1/K) sum_n max_t |Y(n, t)|^2 over K consecutive FFT
blocks. Sequential statistic: m(n) = max(m(n-1) + E_n - E0, 0). Both take the
peak over the bins near the pilot when a pilot frequency is configured, and
over all non-DC bins otherwise.
"""

import logging
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from srsense.utils.exceptions import (
    InputValidationError,
    InsufficientSamplesError,
)
from srsense.utils.montecarlo import run_indexed
from srsense.utils.seeding import SeedPath
from srsense.utils.signal import (
    Hypothesis,
    NoiseSpec,
    SampleStream,
    ToneSpec,
    gen_awgn,
    gen_sinusoid,
)
from srsense.utils.spectral import block_periodograms
from srsense.utils.srfilter import IntegratorConfig, SRParams, filter_stream

LOG = logging.getLogger(__name__)

PFA_TOLERANCE = 0.02


# region Config and state types
@dataclass(frozen=True)
class SRPretreatment:
    params: SRParams
    integrator: IntegratorConfig


@dataclass(frozen=True)
class BlockDetectorConfig:
    nfft: int = 256
    sensing_window_samples: int = 512
    pretreat: SRPretreatment | None = None
    sample_rate_hz: float = 100.0
    pilot_freq_hz: float | None = None
    pilot_tol_bins: int = 2

    def __post_init__(self):
        if self.nfft < 8 or self.nfft & (self.nfft - 1):
            raise InputValidationError(
                f"nfft must be a power of two >= 8: {self.nfft}"
            )
        if (
            self.sensing_window_samples < self.nfft
            or self.sensing_window_samples % self.nfft
        ):
            raise InputValidationError(
                f"sensing window {self.sensing_window_samples} must be a "
                f"positive multiple of nfft={self.nfft}"
            )
        if self.pilot_tol_bins < 0:
            raise InputValidationError(
                f"pilot tolerance must be >= 0: {self.pilot_tol_bins}"
            )

    @property
    def blocks(self) -> int:
        return self.sensing_window_samples // self.nfft

    @property
    def transient(self) -> int:
        if self.pretreat is None:
            return 0
        return self.pretreat.integrator.discard_transient

    @property
    def samples_required(self) -> int:
        """Raw samples needed for one decision, transient included."""
        return self.sensing_window_samples + self.transient

    @property
    def label(self) -> str:
        return "plain" if self.pretreat is None else "sr"

    def with_window(self, samples: int) -> "BlockDetectorConfig":
        return replace(self, sensing_window_samples=samples)


@dataclass(frozen=True)
class Threshold:
    gamma: float
    target_pfa: float
    calibration_trials: int
    achieved_pfa: float


@dataclass(frozen=True)
class SequentialState:
    e0: float
    gamma: float
    m: float = 0.0
    windows_seen: int = 0

    def __post_init__(self):
        if self.m < 0:
            raise InputValidationError(f"m must be >= 0: {self.m}")
        if not self.gamma > 0:
            raise InputValidationError(
                f"sequential threshold must be positive: {self.gamma}"
            )


@dataclass(frozen=True, eq=False)
class SequentialResult:
    alarm_window: int | None
    trajectory: np.ndarray


@dataclass(frozen=True)
class DualConfig:
    plain_threshold: Threshold
    sr_threshold: Threshold
    rule: str = "or"

    def __post_init__(self):
        if self.rule != "or":
            raise InputValidationError(
                f"unsupported combining rule: {self.rule!r}"
            )


# endregion


# region Metrics
def pretreat_stream(
    stream: SampleStream,
    cfg: BlockDetectorConfig,
    seed: SeedPath | None = None,
) -> SampleStream:
    """Apply the configured SR pre-treatment, or pass the stream through."""
    if cfg.pretreat is None:
        return stream
    integrator = cfg.pretreat.integrator
    if seed is not None:
        integrator = replace(integrator, seed=seed)
    return filter_stream(stream, cfg.pretreat.params, integrator)


def _peak_energies(
    samples: np.ndarray, cfg: BlockDetectorConfig
) -> np.ndarray:
    power = block_periodograms(samples, cfg.nfft)
    if cfg.pilot_freq_hz is None:
        return power[:, 1:].max(axis=1)
    bin_width = cfg.sample_rate_hz / cfg.nfft
    center = int(round(cfg.pilot_freq_hz / bin_width))
    lo = max(center - cfg.pilot_tol_bins, 0)
    hi = min(center + cfg.pilot_tol_bins, power.shape[1] - 1)
    if lo > hi:
        raise InputValidationError(
            f"pilot at {cfg.pilot_freq_hz} Hz lies outside the band"
        )
    return power[:, lo : hi + 1].max(axis=1)


def window_energies(
    stream: SampleStream,
    cfg: BlockDetectorConfig,
    seed: SeedPath | None = None,
) -> np.ndarray:
    """
    E_n for every complete FFT window of the (pre-treated) stream: peak power
    near the pilot, or over all non-DC bins when no pilot is configured.
    """
    treated = pretreat_stream(stream, cfg, seed)
    if len(treated) < cfg.nfft:
        raise InsufficientSamplesError(
            f"{len(treated)} samples do not fill one FFT window of {cfg.nfft}"
        )
    return _peak_energies(treated.samples, cfg)


def block_metric(
    stream: SampleStream,
    cfg: BlockDetectorConfig,
    seed: SeedPath | None = None,
) -> float:
    treated = pretreat_stream(stream, cfg, seed)
    if len(treated) < cfg.sensing_window_samples:
        raise InsufficientSamplesError(
            f"sensing window needs {cfg.sensing_window_samples} samples "
            f"after pre-treatment, got {len(treated)}"
        )
    window = treated.samples[: cfg.sensing_window_samples]
    return float(_peak_energies(window, cfg).mean())


def block_decide(metric: float, th: Threshold) -> Hypothesis:
    return Hypothesis.H1 if metric > th.gamma else Hypothesis.H0


# endregion


# region Monte Carlo simulation
def trial_stream(
    cfg: BlockDetectorConfig,
    tone: ToneSpec | None,
    variance: float,
    seed: SeedPath,
    n: int | None = None,
) -> SampleStream:
    """
    One received stream long enough for cfg: channel noise from seed.child(0),
    plus the tone when given.
    """
    n = n or cfg.samples_required
    fs = cfg.sample_rate_hz
    noise = gen_awgn(NoiseSpec(variance, seed.child(0)), n, fs)
    if tone is None:
        return noise
    return SampleStream(gen_sinusoid(tone, n, fs).samples + noise.samples, fs)


def _metric_trial(
    index: int,
    cfg: BlockDetectorConfig,
    tone: ToneSpec | None,
    variance: float,
    seed: SeedPath,
) -> float:
    trial = seed.child(index)
    stream = trial_stream(cfg, tone, variance, trial)
    return block_metric(stream, cfg, trial.child(1))


def simulate_metrics(
    cfg: BlockDetectorConfig,
    variance: float,
    trials: int,
    seed: SeedPath,
    tone: ToneSpec | None = None,
    workers: int = 1,
    progress: bool = False,
) -> np.ndarray:
    """Block metrics of `trials` independent streams, in trial order."""
    worker = partial(
        _metric_trial, cfg=cfg, tone=tone, variance=variance, seed=seed
    )
    return np.array(
        run_indexed(
            worker,
            list(range(trials)),
            workers=workers,
            progress=progress,
            desc=f"{cfg.label} metrics",
        )
    )


# endregion


# region Thresholds
def threshold_from_samples(samples, target_pfa: float) -> float:
    """Empirical (1 - pfa) quantile, taken as an order statistic."""
    if not 0.0 <= target_pfa < 1.0:
        raise InputValidationError(
            f"false alarm target must lie in [0, 1): {target_pfa}"
        )
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size == 0:
        raise InsufficientSamplesError("no calibration samples")
    return float(np.quantile(arr, 1.0 - target_pfa, method="inverted_cdf"))


def empirical_gamma(samples, pfa: float) -> float:
    if pfa >= 1.0:
        return -np.inf
    return threshold_from_samples(samples, max(pfa, 0.0))


def threshold_for(samples, target_pfa: float) -> Threshold:
    arr = np.asarray(samples, dtype=np.float64)
    gamma = threshold_from_samples(arr, target_pfa)
    achieved = float(np.mean(arr > gamma))
    if abs(achieved - target_pfa) > PFA_TOLERANCE:
        LOG.warning(
            f"Calibrated Pfa {achieved:.3f} is off target {target_pfa:.3f}"
        )
    return Threshold(gamma, target_pfa, int(arr.size), achieved)


def calibrate_threshold(
    cfg: BlockDetectorConfig,
    noise: NoiseSpec,
    target_pfa: float,
    trials: int,
    seed: SeedPath,
    workers: int = 1,
    progress: bool = False,
) -> Threshold:
    """
    gamma = empirical (1 - target_pfa) quantile of M over `trials` H0 runs.
    Only the variance of `noise` is used; per-trial noise comes from seed.
    """
    if trials < 100:
        raise InputValidationError(
            f"calibration needs at least 100 trials, got {trials}"
        )
    if not 0.0 < target_pfa < 1.0:
        raise InputValidationError(
            f"false alarm target must lie in (0, 1): {target_pfa}"
        )
    metrics = simulate_metrics(
        cfg, noise.variance, trials, seed, workers=workers, progress=progress
    )
    th = threshold_for(metrics, target_pfa)
    LOG.debug(
        f"{cfg.label} threshold gamma={th.gamma:.6g} at Pfa={target_pfa:g}"
    )
    return th


def calibrate_dual(
    plain_cfg: BlockDetectorConfig,
    sr_cfg: BlockDetectorConfig,
    noise: NoiseSpec,
    target_pfa: float,
    trials: int,
    seed: SeedPath,
    workers: int = 1,
) -> DualConfig:
    """Calibrate both branches at target_pfa / 2 on the same H0 streams."""
    half = target_pfa / 2
    return DualConfig(
        plain_threshold=calibrate_threshold(
            plain_cfg, noise, half, trials, seed, workers
        ),
        sr_threshold=calibrate_threshold(
            sr_cfg, noise, half, trials, seed, workers
        ),
    )


def dual_decide(
    stream: SampleStream,
    dual: DualConfig,
    plain_cfg: BlockDetectorConfig,
    sr_cfg: BlockDetectorConfig,
    seed: SeedPath | None = None,
) -> Hypothesis:
    plain_metric = block_metric(stream, plain_cfg)
    plain = block_decide(plain_metric, dual.plain_threshold)
    if plain is Hypothesis.H1:
        return plain
    return block_decide(block_metric(stream, sr_cfg, seed), dual.sr_threshold)


# endregion


# region Sequential detection
def estimate_e0(
    cfg: BlockDetectorConfig,
    noise: NoiseSpec,
    trials: int,
    margin_factor: float = 0.5,
    seed: SeedPath | None = None,
    workers: int = 1,
) -> float:
    """E0 = mean + margin_factor * std of the H0 window energies."""
    if trials < 100:
        raise InputValidationError(
            f"E0 estimation needs at least 100 trials, got {trials}"
        )
    seed = seed or noise.seed

    def energies(index: int) -> np.ndarray:
        trial = seed.child(index)
        stream = trial_stream(cfg, None, noise.variance, trial)
        return window_energies(stream, cfg, trial.child(1))

    pooled = np.concatenate(
        run_indexed(energies, list(range(trials)), workers=workers)
    )
    return float(pooled.mean() + margin_factor * pooled.std())


def seq_update(
    state: SequentialState, e_n: float
) -> tuple[SequentialState, bool]:
    m = max(state.m + e_n - state.e0, 0.0)
    new = replace(state, m=m, windows_seen=state.windows_seen + 1)
    return new, m > state.gamma


def cusum_trajectory(energies, e0: float) -> np.ndarray:
    m = np.empty(len(energies))
    level = 0.0
    for i, e_n in enumerate(energies):
        level = max(level + float(e_n) - e0, 0.0)
        m[i] = level
    return m


def first_alarm(trajectory: np.ndarray, gamma: float) -> int | None:
    """1-based index of the first window with m > gamma."""
    hits = np.flatnonzero(trajectory > gamma)
    return int(hits[0]) + 1 if hits.size else None


def seq_run(
    stream: SampleStream,
    cfg: BlockDetectorConfig,
    e0: float,
    gamma: float,
    seed: SeedPath | None = None,
) -> SequentialResult:
    energies = window_energies(stream, cfg, seed)
    state = SequentialState(e0=e0, gamma=gamma)
    trajectory = np.empty(energies.size)
    alarm = None
    for i, e_n in enumerate(energies):
        state, fired = seq_update(state, float(e_n))
        trajectory[i] = state.m
        if fired and alarm is None:
            alarm = state.windows_seen
    return SequentialResult(alarm, trajectory)


# endregion
