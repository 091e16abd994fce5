"""
srsense: stochastic-resonance pre-treated spectrum sensing simulator.
"""

from .utils.signal import SampleStream, ToneSpec, NoiseSpec, Hypothesis
from .utils.srfilter import SRParams, IntegratorConfig, filter_stream
from .utils.detect import BlockDetectorConfig, SRPretreatment, Threshold
from .tools.experiment import ExperimentConfig, load_config
from .tools.bench import cli_main, run_experiment

__all__ = [
    "SampleStream",
    "ToneSpec",
    "NoiseSpec",
    "Hypothesis",
    "SRParams",
    "IntegratorConfig",
    "filter_stream",
    "BlockDetectorConfig",
    "SRPretreatment",
    "Threshold",
    "ExperimentConfig",
    "load_config",
    "cli_main",
    "run_experiment",
]
