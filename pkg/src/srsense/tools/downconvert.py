"""
Pilot downconversion check.

Each pilot (optionally shifted by a frequency error) is synthesized at the
simulation rate, mixed with its fixed mixer, low-passed and decimated to the
SR filter's rate. The dominant bin of the output periodogram is compared to
|f_pilot - f_mix|, and the filter's attenuation at the folded image frequency
is reported.
Rows: pilot_hz,mixer_hz,expected_hz,measured_hz,image_suppression_db
"""

import logging

import numpy as np
import pandas as pd

from srsense.tools.experiment import ExperimentConfig, make_table
from srsense.utils.result_table import ResultTable
from srsense.utils.signal import (
    LowpassSpec,
    ToneSpec,
    design_lowpass,
    gen_sinusoid,
    lowpass_response_db,
    mix_and_decimate,
)
from srsense.utils.spectral import periodogram

LOG = logging.getLogger(__name__)


def folded_frequency(freq_hz: float, fs: float) -> float:
    """Frequency a real tone appears at after sampling at fs."""
    f = freq_hz % fs
    return fs - f if f > fs / 2 else f


def dominant_frequency(samples: np.ndarray, fs: float) -> float:
    nfft = 1 << (samples.size.bit_length() - 1)
    p = periodogram(samples[:nfft], nfft, fs)
    return float(p.freqs_hz[int(np.argmax(p.power))])


def run_downconvert(
    cfg: ExperimentConfig, workers: int = 1, progress: bool = False
) -> ResultTable:
    section = cfg.downconvert
    fs = section.sim_rate_hz
    lpf = LowpassSpec(section.cutoff_hz, section.taps, section.decimation)
    taps = design_lowpass(lpf, fs)
    n = int(round(section.duration_s * fs))
    rows = []
    for pilot, mixer in zip(section.pilots_hz, section.mixers_hz):
        for offset in section.pilot_offsets_hz:
            freq = pilot + offset
            stream = gen_sinusoid(ToneSpec(freq, section.amplitude), n, fs)
            out = mix_and_decimate(stream, mixer, lpf, tone_hz=freq)
            expected = abs(freq - mixer)
            measured = dominant_frequency(out.samples, out.sample_rate_hz)
            image = folded_frequency(freq + mixer, fs)
            suppression = -lowpass_response_db(taps, image, fs)
            LOG.info(
                f"Pilot {freq:.1f} Hz, mixer {mixer:.1f} Hz: expected "
                f"{expected:.2f} Hz, measured {measured:.2f} Hz, image "
                f"suppressed by {suppression:.1f} dB"
            )
            rows.append((freq, mixer, expected, measured, suppression))
    frame = pd.DataFrame(
        rows,
        columns=[
            "pilot_hz",
            "mixer_hz",
            "expected_hz",
            "measured_hz",
            "image_suppression_db",
        ],
    )
    return make_table(cfg, frame)
