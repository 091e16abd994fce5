"""
Input vs SR-output power spectral density at the tuned noise intensity,
under the slow-drive scenario of the [psd] section.

Rows: series ("input" | "output"), freq_hz, power, followed by one summary
row with series = "peak_ratio" holding the output/input peak power ratio at
the drive frequency.
"""

import logging
from functools import partial

import pandas as pd

from srsense.tools.experiment import ExperimentConfig, make_table
from srsense.utils.montecarlo import run_indexed
from srsense.utils.result_table import ResultTable
from srsense.utils.spectral import average_psd, peak_power_near
from srsense.utils.tuning import drive_and_output_psds

LOG = logging.getLogger(__name__)

PEAK_TOL_BINS = 2


def run_psd_demo(
    cfg: ExperimentConfig, workers: int = 1, progress: bool = False
) -> ResultTable:
    tone = cfg.tone_spec()
    sweep = cfg.psd_sweep_config()
    worker = partial(
        drive_and_output_psds,
        p=cfg.params,
        tone=tone,
        noise_d=cfg.psd.noise_d,
        seed=cfg.base_seed(),
        sweep=sweep,
    )
    pairs = run_indexed(
        worker,
        list(range(cfg.experiment.trials)),
        workers=workers,
        progress=progress,
        desc="psd",
    )
    psd_in = average_psd([pair[0] for pair in pairs])
    psd_out = average_psd([pair[1] for pair in pairs])

    peak_in, _ = peak_power_near(psd_in, tone.freq_hz, PEAK_TOL_BINS)
    peak_out, _ = peak_power_near(psd_out, tone.freq_hz, PEAK_TOL_BINS)
    ratio = peak_out / peak_in if peak_in > 0 else float("inf")
    LOG.info(
        f"Peak power at {tone.freq_hz:g} Hz: input {peak_in:.4g}, "
        f"output {peak_out:.4g} (ratio {ratio:.3g}) at D={cfg.psd.noise_d:g}"
    )

    frames = []
    for series, psd in (("input", psd_in), ("output", psd_out)):
        frame = psd.to_frame()
        frame.insert(0, "series", series)
        frames.append(frame)
    summary = pd.DataFrame(
        [("peak_ratio", tone.freq_hz, ratio)],
        columns=["series", "freq_hz", "power"],
    )
    frames.append(summary)
    return make_table(cfg, pd.concat(frames, ignore_index=True))
