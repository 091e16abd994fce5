"""
Bistable stochastic-resonance filter.

The particle x obeys dx = (a x - b x^3 + u) dt + sqrt(2 D) dW, where u is
the received waveform held constant over each input sample and D is the
intensity of the internally injected noise. Integration is explicit
Euler-Maruyama with a fixed number of substeps per input sample.
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit  # type: ignore[import-untyped]

from srsense.utils.exceptions import (
    InputValidationError,
    IntegratorDivergenceError,
)
from srsense.utils.seeding import SeedPath
from srsense.utils.signal import SampleStream

LOG = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True)
class SRParams:
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InputValidationError(
                f"bistable well needs a > 0 and b > 0: a={self.a}, b={self.b}"
            )


@dataclass(frozen=True)
class IntegratorConfig:
    """
    Discretization of the SR dynamics.

    sample_period is the model time spanned by one input sample. None means
    physical seconds (1/fs of the input stream). step_h * substeps_per_sample
    must equal that period.
    initial_x None starts the particle at +sqrt(a/b).
    """

    step_h: float = 0.05
    substeps_per_sample: int = 20
    added_noise_d: float = 0.0
    initial_x: float | None = None
    discard_transient: int = 256
    seed: SeedPath | None = None
    sample_period: float | None = 1.0

    def __post_init__(self):
        if not self.step_h > 0:
            raise InputValidationError(
                f"step must be positive: {self.step_h}"
            )
        if self.substeps_per_sample < 1:
            raise InputValidationError(
                f"substeps must be >= 1: {self.substeps_per_sample}"
            )
        if self.added_noise_d < 0:
            raise InputValidationError(
                f"injected noise intensity must be >= 0: {self.added_noise_d}"
            )
        if self.discard_transient < 0:
            raise InputValidationError(
                f"transient discard must be >= 0: {self.discard_transient}"
            )
        if self.sample_period is not None and not self.sample_period > 0:
            raise InputValidationError(
                f"sample period must be positive: {self.sample_period}"
            )

    @classmethod
    def for_stream(
        cls,
        fs: float,
        substeps_per_sample: int = 20,
        sample_period: float | None = 1.0,
        **kwargs,
    ) -> "IntegratorConfig":
        period = sample_period if sample_period is not None else 1.0 / fs
        return cls(
            step_h=period / substeps_per_sample,
            substeps_per_sample=substeps_per_sample,
            sample_period=sample_period,
            **kwargs,
        )

    def period_for(self, fs: float) -> float:
        if self.sample_period is None:
            return 1 / fs
        return self.sample_period

    def check_rate(self, fs: float) -> None:
        period = self.period_for(fs)
        span = self.step_h * self.substeps_per_sample
        if not math.isclose(span, period, rel_tol=1e-9):
            raise InputValidationError(
                f"step_h * substeps = {span:g} does not match the sample "
                f"period {period:g}"
            )

    def with_noise(
        self, added_noise_d: float, seed: SeedPath | None = None
    ) -> "IntegratorConfig":
        return replace(
            self, added_noise_d=added_noise_d, seed=seed or self.seed
        )


@dataclass(frozen=True)
class SRState:
    x: float
    t: float = 0.0


# region Closed-form diagnostics
def potential(x: float | np.ndarray, p: SRParams) -> float | np.ndarray:
    return -(p.a / 2) * x**2 + (p.b / 4) * x**4


def stable_points(p: SRParams) -> tuple[float, float, float]:
    xm = math.sqrt(p.a / p.b)
    return -xm, xm, 0.0


def barrier_height(p: SRParams) -> float:
    return p.a**2 / (4 * p.b)


def kramers_rate(p: SRParams, noise_d: float) -> float:
    """Well-hopping rate a/(sqrt(2) pi) * exp(-dV/D)."""
    if not noise_d > 0:
        raise InputValidationError(
            f"Kramers rate needs D > 0, got {noise_d}"
        )
    return p.a / (math.sqrt(2) * math.pi) * math.exp(
        -barrier_height(p) / noise_d
    )


# endregion


# region Channel noise bookkeeping
def channel_noise_intensity(variance: float, sample_period: float) -> float:
    """Intensity D that per-sample channel noise induces under a hold."""
    return variance * sample_period / 2


def noise_variance_for_intensity(
    noise_d: float, sample_period: float
) -> float:
    return 2 * noise_d / sample_period


def injected_noise_for(
    target_d: float, channel_variance: float, sample_period: float
) -> float:
    """Internal noise needed on top of the channel to reach target_d."""
    return max(
        target_d - channel_noise_intensity(channel_variance, sample_period),
        0.0,
    )


# endregion


# region Integration
def _check_finite(x: float, index: int, noise_d: float) -> None:
    if not abs(x) <= DIVERGENCE_LIMIT:
        raise IntegratorDivergenceError(index, x, noise_d or None)


def step(
    state: SRState,
    input_u: float,
    p: SRParams,
    cfg: IntegratorConfig,
    rng: np.random.Generator | None = None,
) -> SRState:
    """One Euler-Maruyama substep."""
    h = cfg.step_h
    x = state.x + h * (p.a * state.x - p.b * state.x**3 + input_u)
    if cfg.added_noise_d > 0:
        if rng is None:
            if cfg.seed is None:
                raise InputValidationError(
                    "injected noise requires a seed path or a generator"
                )
            rng = cfg.seed.generator()
        x += math.sqrt(2 * cfg.added_noise_d * h) * rng.standard_normal()
    _check_finite(x, 0, cfg.added_noise_d)
    return SRState(float(x), state.t + h)


@njit(cache=True)
def _euler_kernel(u, x0, a, b, h, substeps, noise_scale, xi):
    n = u.size
    out = np.empty(n)
    x = x0
    for k in range(n):
        uk = u[k]
        base = k * substeps
        for j in range(substeps):
            x = x + h * (a * x - b * x * x * x + uk)
            if noise_scale > 0.0:
                x = x + noise_scale * xi[base + j]
        if not abs(x) <= 1e6:
            return out, k, x
        out[k] = x
    return out, -1, x


def filter_stream(
    stream: SampleStream, p: SRParams, cfg: IntegratorConfig
) -> SampleStream:
    """
    Run the SR filter over the stream and sample x once per input sample.
    The first discard_transient outputs are dropped.
    """
    if len(stream) == 0:
        raise InputValidationError("cannot filter an empty stream")
    cfg.check_rate(stream.sample_rate_hz)
    x0 = stable_points(p)[1] if cfg.initial_x is None else cfg.initial_x
    substeps = cfg.substeps_per_sample
    if cfg.added_noise_d > 0:
        if cfg.seed is None:
            raise InputValidationError(
                "injected noise requires a seed path on the integrator"
            )
        xi = cfg.seed.generator().standard_normal(len(stream) * substeps)
        scale = math.sqrt(2 * cfg.added_noise_d * cfg.step_h)
    else:
        xi = np.empty(0)
        scale = 0.0
    out, fail, value = _euler_kernel(
        stream.samples, float(x0), p.a, p.b, cfg.step_h, substeps, scale, xi
    )
    if fail >= 0:
        raise IntegratorDivergenceError(
            int(fail), float(value), cfg.added_noise_d or None
        )
    return SampleStream(out[cfg.discard_transient :], stream.sample_rate_hz)


def switching_rate(
    stream: SampleStream,
    p: SRParams,
    sample_period: float | None = None,
) -> float:
    """
    Well-to-well transitions per unit model time.
    A transition is counted when x reaches the opposite stable point, which
    keeps barrier-top jitter from being counted.
    """
    x = stream.samples
    if x.size == 0:
        raise InputValidationError("empty stream has no switching rate")
    xm = stable_points(p)[1]
    period = (
        sample_period if sample_period is not None else stream.sample_period
    )
    # Hysteresis: +1 above xm, -1 below -xm, carry the last well otherwise
    marks = np.where(x >= xm, 1.0, np.where(x <= -xm, -1.0, np.nan))
    filled = _forward_fill(marks)
    filled = filled[~np.isnan(filled)]
    transitions = int(np.count_nonzero(np.diff(filled)))
    return transitions / (x.size * period)


def _forward_fill(values: np.ndarray) -> np.ndarray:
    idx = np.where(~np.isnan(values), np.arange(values.size), 0)
    np.maximum.accumulate(idx, out=idx)
    return values[idx]


# endregion
