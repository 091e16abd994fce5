"""
FFT periodograms, averaged PSDs and narrowband SNR.

All power values share one normalization: |DFT|^2 / nfft^2, one-sided, with
the bins strictly between DC and Nyquist doubled. Under it the bins of a
block sum to the block's mean square and an on-bin unit tone reads 0.5.
"""

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import signal as sps

from srsense.utils.exceptions import (
    InputValidationError,
    InsufficientSamplesError,
)
from srsense.utils.signal import SampleStream


@dataclass(frozen=True, eq=False)
class Periodogram:
    power: np.ndarray
    bin_width_hz: float
    nfft: int

    def __post_init__(self):
        if self.power.shape != (self.nfft // 2 + 1,):
            raise InputValidationError(
                f"one-sided periodogram of nfft={self.nfft} needs "
                f"{self.nfft // 2 + 1} bins, got {self.power.shape}"
            )

    @property
    def freqs_hz(self) -> np.ndarray:
        return np.arange(self.power.size) * self.bin_width_hz

    @property
    def sample_rate_hz(self) -> float:
        return self.bin_width_hz * self.nfft

    def bin_of(self, freq_hz: float) -> int:
        return int(round(freq_hz / self.bin_width_hz))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"freq_hz": self.freqs_hz, "power": self.power})


@dataclass(frozen=True, eq=False)
class PsdEstimate(Periodogram):
    segments: int = 1

    def __post_init__(self):
        super().__post_init__()
        if self.segments < 1:
            raise InputValidationError(
                f"segment count must be >= 1: {self.segments}"
            )


def _check_nfft(nfft: int) -> None:
    if nfft < 8 or nfft & (nfft - 1):
        raise InputValidationError(
            f"FFT length must be a power of two >= 8: {nfft}"
        )


def dft_block(block) -> np.ndarray:
    """Unnormalized forward DFT of one block."""
    arr = np.asarray(block)
    _check_nfft(arr.size)
    return np.fft.fft(arr)


def block_periodograms(samples: np.ndarray, nfft: int) -> np.ndarray:
    """
    Periodograms of consecutive non-overlapping nfft blocks, one row per
    block. A trailing partial block is ignored.
    """
    _check_nfft(nfft)
    k = samples.size // nfft
    blocks = samples[: k * nfft].reshape(k, nfft)
    power = np.abs(np.fft.rfft(blocks, axis=1)) ** 2 / nfft**2
    power[:, 1:-1] *= 2
    return power


def periodogram(
    block, nfft: int, sample_rate_hz: float = 1.0
) -> Periodogram:
    arr = np.asarray(block, dtype=np.float64)
    if arr.size != nfft:
        raise InputValidationError(
            f"block length {arr.size} does not match nfft={nfft}"
        )
    power = block_periodograms(arr, nfft)[0]
    return Periodogram(power, sample_rate_hz / nfft, nfft)


def welch_psd(
    stream: SampleStream, nfft: int, overlap_fraction: float = 0.5
) -> PsdEstimate:
    """Mean of rectangular-window periodograms over overlapping segments."""
    _check_nfft(nfft)
    if not 0.0 <= overlap_fraction < 1.0:
        raise InputValidationError(
            f"overlap must lie in [0, 1): {overlap_fraction}"
        )
    if len(stream) < nfft:
        raise InsufficientSamplesError(
            f"stream of {len(stream)} samples is shorter than nfft={nfft}"
        )
    noverlap = int(nfft * overlap_fraction)
    fs = stream.sample_rate_hz
    _, power = sps.welch(
        stream.samples,
        fs=fs,
        window="boxcar",
        nperseg=nfft,
        noverlap=noverlap,
        detrend=False,
        scaling="spectrum",
        return_onesided=True,
    )
    segments = (len(stream) - nfft) // (nfft - noverlap) + 1
    return PsdEstimate(power, fs / nfft, nfft, segments)


def average_psd(estimates: list[PsdEstimate]) -> PsdEstimate:
    """Pool estimates of equal shape, weighting by segment count."""
    if not estimates:
        raise InputValidationError("nothing to average")
    first = estimates[0]
    weights = np.array([e.segments for e in estimates], dtype=float)
    stacked = np.stack([e.power for e in estimates])
    power = weights @ stacked / weights.sum()
    return PsdEstimate(
        power, first.bin_width_hz, first.nfft, int(weights.sum())
    )


def peak_power_near(
    p: Periodogram, f_target: float, tol_bins: int
) -> tuple[float, int]:
    if not 0 <= f_target <= p.sample_rate_hz / 2:
        raise InputValidationError(
            f"target {f_target} Hz outside [0, {p.sample_rate_hz / 2}] Hz"
        )
    center = p.bin_of(f_target)
    lo = max(center - tol_bins, 0)
    hi = min(center + tol_bins, p.power.size - 1)
    idx = lo + int(np.argmax(p.power[lo : hi + 1]))
    return float(p.power[idx]), idx


def snr_at_frequency(
    p: Periodogram,
    f_target: float,
    signal_halfwidth_bins: int = 2,
    guard_bins: int = 3,
    band_reference: bool = False,
) -> float:
    """
    Narrowband SNR in dB at f_target.

    The floor is the median power of the bins outside the signal and guard
    regions (DC excluded). The signal excess over the floor is referred to
    the floor over the signal region, or over the whole one-sided band when
    band_reference is set. Returns +inf for a zero floor and -inf when the
    signal region does not rise above the floor.
    """
    n = p.power.size
    center = p.bin_of(f_target)
    if not 0 <= center < n:
        raise InputValidationError(
            f"target {f_target} Hz outside the periodogram band"
        )
    lo = max(center - signal_halfwidth_bins, 0)
    hi = min(center + signal_halfwidth_bins, n - 1)
    mask = np.ones(n, dtype=bool)
    mask[0] = False
    mask[
        max(lo - guard_bins, 0) : min(hi + guard_bins, n - 1) + 1
    ] = False
    if np.count_nonzero(mask) < 4:
        raise InsufficientSamplesError(
            "too few bins outside the signal and guard regions"
        )
    floor = float(np.median(p.power[mask]))
    region = p.power[lo : hi + 1]
    width = region.size
    if floor == 0:
        return math.inf if region.sum() > 0 else -math.inf
    excess = float(region.sum()) - floor * width
    if excess <= 0:
        return -math.inf
    reference = floor * (p.nfft // 2 if band_reference else width)
    return 10 * math.log10(excess / reference)
