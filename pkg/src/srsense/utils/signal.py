"""
Observation synthesis and downconversion.

Streams are real-valued and uniformly sampled. H0 observations are white
Gaussian noise, H1 observations add a sinusoid. High-frequency pilots are
brought into the SR filter's operating range by a real mixer followed by a
low-pass FIR and decimation.
"""

import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import signal as sps

from srsense.utils.exceptions import (
    InputValidationError,
    InsufficientSamplesError,
)
from srsense.utils.seeding import SeedPath

LOG = logging.getLogger(__name__)

ATSC_PILOTS_HZ = (309440.6, 328843.6)

MAX_STAGE_FACTOR = 10
STAGE_TAPS_PER_FACTOR = 20
STAGE_PASS_FRACTION = 0.8


class Hypothesis(StrEnum):
    H0 = "H0"
    H1 = "H1"


# region Domain types
@dataclass(frozen=True, eq=False)
class SampleStream:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise InputValidationError(
                f"sample rate must be positive: {self.sample_rate_hz}"
            )
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise InputValidationError("samples must be one-dimensional")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def sample_period(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    def head(self, n: int) -> "SampleStream":
        return SampleStream(self.samples[:n], self.sample_rate_hz)

    def tail(self, start: int) -> "SampleStream":
        return SampleStream(self.samples[start:], self.sample_rate_hz)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"index": np.arange(len(self)), "value": self.samples}
        )

    def to_csv(self, path: str | Path) -> None:
        self.to_frame().to_csv(
            path, index=False, float_format="%.10g", lineterminator="\n"
        )


@dataclass(frozen=True)
class ToneSpec:
    freq_hz: float
    amplitude: float = 0.3
    phase_rad: float = 0.0

    def __post_init__(self):
        if not self.freq_hz > 0:
            raise InputValidationError(
                f"tone frequency must be positive: {self.freq_hz}"
            )
        if self.amplitude < 0:
            raise InputValidationError(
                f"tone amplitude must be >= 0: {self.amplitude}"
            )
        if not 0.0 <= self.phase_rad < 2 * math.pi:
            raise InputValidationError(
                f"tone phase must lie in [0, 2pi): {self.phase_rad}"
            )

    @property
    def power(self) -> float:
        return self.amplitude**2 / 2


@dataclass(frozen=True)
class NoiseSpec:
    variance: float
    seed: SeedPath

    def __post_init__(self):
        if self.variance < 0:
            raise InputValidationError(
                f"noise variance must be >= 0: {self.variance}"
            )


@dataclass(frozen=True)
class LowpassSpec:
    cutoff_hz: float
    num_taps: int = 101
    decimation: int = 1

    def __post_init__(self):
        if not self.cutoff_hz > 0:
            raise InputValidationError(
                f"cutoff must be positive: {self.cutoff_hz}"
            )
        if self.num_taps < 1 or self.num_taps % 2 == 0:
            raise InputValidationError(
                f"FIR tap count must be odd and positive: {self.num_taps}"
            )
        if self.decimation < 1:
            raise InputValidationError(
                f"decimation must be >= 1: {self.decimation}"
            )

    @property
    def group_delay(self) -> int:
        return (self.num_taps - 1) // 2


# endregion


# region Generators
def _check_count(n: int) -> None:
    if n < 1:
        raise InputValidationError(f"sample count must be >= 1: {n}")


def gen_sinusoid(tone: ToneSpec, n: int, fs: float) -> SampleStream:
    _check_count(n)
    if tone.freq_hz >= fs / 2:
        raise InputValidationError(
            f"tone at {tone.freq_hz} Hz aliases at fs={fs} Hz"
        )
    k = np.arange(n)
    samples = tone.amplitude * np.sin(
        2 * np.pi * tone.freq_hz * k / fs + tone.phase_rad
    )
    return SampleStream(samples, fs)


def gen_awgn(noise: NoiseSpec, n: int, fs: float) -> SampleStream:
    _check_count(n)
    rng = noise.seed.generator()
    samples = math.sqrt(noise.variance) * rng.standard_normal(n)
    return SampleStream(samples, fs)


def synth_observation(
    hyp: Hypothesis,
    tone: ToneSpec,
    noise: NoiseSpec,
    n: int,
    fs: float,
) -> SampleStream:
    """Y(n) = W(n) under H0, S(n) + W(n) under H1."""
    w = gen_awgn(noise, n, fs)
    if Hypothesis(hyp) is Hypothesis.H0:
        return w
    s = gen_sinusoid(tone, n, fs)
    return SampleStream(s.samples + w.samples, fs)


def input_snr(tone: ToneSpec, noise: NoiseSpec) -> float:
    """Per-sample SNR in dB: (A^2/2) / sigma^2."""
    if noise.variance <= 0:
        raise InputValidationError("input SNR undefined for zero noise")
    return 10 * math.log10(tone.power / noise.variance)


def noise_variance_for_snr(amplitude: float, snr_db: float) -> float:
    return (amplitude**2 / 2) / 10 ** (snr_db / 10)


# endregion


# region Downconversion
def design_lowpass(spec: LowpassSpec, fs: float) -> np.ndarray:
    """Linear-phase Hamming windowed-sinc FIR with unit DC gain."""
    if spec.cutoff_hz >= fs / 2:
        raise InputValidationError(
            f"cutoff {spec.cutoff_hz} Hz must be below fs/2 = {fs / 2} Hz"
        )
    taps = sps.firwin(
        spec.num_taps, spec.cutoff_hz, window="hamming", fs=fs, scale=True
    )
    return taps / taps.sum()


def lowpass_response_db(
    taps: np.ndarray, freq_hz: float, fs: float
) -> float:
    _, h = sps.freqz(taps, worN=[freq_hz], fs=fs)
    return float(20 * np.log10(max(abs(h[0]), 1e-300)))


def apply_fir(stream: SampleStream, taps: np.ndarray) -> SampleStream:
    """Delay-compensated FIR filtering; output aligned with the input."""
    taps = np.asarray(taps, float)
    x = stream.samples
    # Dropping the group delay first centres output j on input j
    delay = (taps.size - 1) // 2
    y = sps.upfirdn(taps, x[delay:])
    return SampleStream(y[: x.size], stream.sample_rate_hz)


def decimation_stages(
    total: int, max_factor: int = MAX_STAGE_FACTOR
) -> list[int]:
    """
    Split a decimation factor into stages, each time taking the largest
    factor up to max_factor that divides what is left. A remainder with no
    such factor becomes a stage of its own.
    """
    if total < 1:
        raise InputValidationError(f"decimation must be >= 1: {total}")
    stages: list[int] = []
    rest = total
    while rest > 1:
        factor = next(
            (q for q in range(max_factor, 1, -1) if rest % q == 0), rest
        )
        stages.append(factor)
        rest //= factor
    return stages


def stage_lowpass(factor: int, fs: float) -> np.ndarray:
    """
    Anti-alias filter for one decimation stage: passband up to
    STAGE_PASS_FRACTION of the output Nyquist rate, 20 taps per unit of
    decimation.
    """
    out_nyquist = fs / factor / 2
    taps = sps.firwin(
        STAGE_TAPS_PER_FACTOR * factor + 1,
        STAGE_PASS_FRACTION * out_nyquist,
        window="hamming",
        fs=fs,
    )
    return taps / taps.sum()


def decimate_stream(stream: SampleStream, decimation: int) -> SampleStream:
    """Multistage zero-phase decimation; each stage filters to its own rate."""
    y = stream.samples
    fs = stream.sample_rate_hz
    for factor in decimation_stages(decimation):
        taps = stage_lowpass(factor, fs)
        # mean padding keeps a DC level from ringing at the edges
        y = sps.resample_poly(y, 1, factor, window=taps, padtype="mean")
        fs /= factor
    return SampleStream(y, fs)


def mix_and_decimate(
    stream: SampleStream,
    mixer_freq_hz: float,
    lpf: LowpassSpec,
    tone_hz: float | None = None,
) -> SampleStream:
    """
    Multiply by cos(2 pi f_mix t), remove the mixing image with the lpf
    FIR, then decimate in stages so no band above the output Nyquist rate
    folds into the result. A tone at f_in lands at |f_in - f_mix| with half
    its amplitude. When tone_hz is given, the output frequency is checked
    against the decimated Nyquist rate.
    """
    fs = stream.sample_rate_hz
    if len(stream) < 2 * lpf.num_taps:
        raise InsufficientSamplesError(
            f"need at least {2 * lpf.num_taps} samples for filter warm-up, "
            f"got {len(stream)}"
        )
    out_fs = fs / lpf.decimation
    if tone_hz is not None:
        f_out = abs(tone_hz - mixer_freq_hz)
        if f_out >= out_fs / 2:
            raise InputValidationError(
                f"mixed tone at {f_out:g} Hz aliases after decimation to "
                f"{out_fs:g} Hz"
            )
    taps = design_lowpass(lpf, fs)
    t = np.arange(len(stream)) / fs
    mixed = stream.samples * np.cos(2 * np.pi * mixer_freq_hz * t)
    filtered = apply_fir(SampleStream(mixed, fs), taps)
    out = decimate_stream(filtered, lpf.decimation)
    LOG.debug(
        f"Downconverted {len(stream)} samples at {fs:g} Hz to {len(out)} "
        f"samples at {out_fs:g} Hz in stages "
        f"{decimation_stages(lpf.decimation)}"
    )
    return out


# endregion
