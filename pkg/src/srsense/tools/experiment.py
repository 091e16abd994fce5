"""
Experiment configuration and scenario building.

One TOML file describes a run. Sections map onto the frozen dataclasses
below (keys use dashes, fields underscores); every field has a default that
reproduces the reference setting, so an empty file plus a kind is a valid
run. Sample configurations live in data/templates/.
"""

import logging
import tomllib
from dataclasses import dataclass, field, fields, is_dataclass, replace
from pathlib import Path

import tomlkit
from dataclass_binder import Binder

from srsense.utils.detect import (
    BlockDetectorConfig,
    SRPretreatment,
    simulate_metrics,
)
from srsense.utils.exceptions import ConfigError, InputValidationError
from srsense.utils.result_table import ResultTable
from srsense.utils.seeding import SeedPath, experiment_id
from srsense.utils.signal import ATSC_PILOTS_HZ, ToneSpec
from srsense.utils.signal import noise_variance_for_snr
from srsense.utils.srfilter import (
    IntegratorConfig,
    SRParams,
    injected_noise_for,
)
from srsense.utils.tuning import SweepConfig

LOG = logging.getLogger(__name__)

KINDS = (
    "psd",
    "gainsweep",
    "tune",
    "roc",
    "pdwindow",
    "seqdelay",
    "downconvert",
)
DETECTORS = ("plain", "sr", "dual")
TIME_BASES = ("sample", "seconds")


# region Config dataclasses
@dataclass(frozen=True)
class RunSection:
    kind: str = ""
    trials: int = 1000
    master_seed: int = 1
    output: str | None = None


@dataclass(frozen=True)
class ToneSection:
    freq_hz: float = 10.0
    amplitude: float = 0.3
    phase_rad: float = 0.0
    sample_rate_hz: float = 100.0
    # snap freq-hz to the nearest bin of the plain FFT
    bin_aligned: bool = False


@dataclass(frozen=True)
class ChannelSection:
    snr_db: tuple[float, ...] = (-25.0, -20.0, -15.0, -10.0)
    # false: H1 streams carry no tone (no-signal sanity mode)
    signal_present: bool = True


@dataclass(frozen=True)
class PlainSection:
    nfft: int = 256
    sensing_window: int = 512


@dataclass(frozen=True)
class SRSection:
    a: float = 1.0
    b: float = 1.0
    # total noise intensity targeted at the integrator; the channel's share
    # is subtracted before injecting the rest
    noise_d: float = 0.43
    substeps: int = 20
    time_base: str = "sample"
    discard_transient: int | None = None
    # the SR branch reads its output within this many bins of the tone
    pilot_tol_bins: int = 2


@dataclass(frozen=True)
class RocSection:
    points: int = 21
    detectors: tuple[str, ...] = ("plain", "sr", "dual")


@dataclass(frozen=True)
class PdWindowSection:
    windows: tuple[int, ...] = (256, 512, 1024, 2048, 4096)
    snr_db: float = -20.0
    target_pfa: float = 0.1
    detectors: tuple[str, ...] = ("plain", "sr", "dual")


@dataclass(frozen=True)
class SeqDelaySection:
    horizon: int = 200
    snr_db: float = -20.0
    target_pfas: tuple[float, ...] = (0.05, 0.1, 0.2)
    gammas: tuple[float, ...] = ()
    margin_factor: float = 0.5
    e0_trials: int = 200
    detectors: tuple[str, ...] = ("plain", "sr")


@dataclass(frozen=True)
class SweepSection:
    grid: tuple[float, ...] = (
        0.05, 0.07, 0.1, 0.13, 0.17, 0.22, 0.28, 0.35,
        0.43, 0.52, 0.63, 0.77, 0.95, 1.2, 1.5,
    )  # fmt: skip
    samples: int = 4096
    overlap: float = 0.5
    noise_entry: str = "internal"
    signal_halfwidth_bins: int = 2
    guard_bins: int = 3


@dataclass(frozen=True)
class TuneSection:
    d_lo: float = 0.05
    d_hi: float = 1.5
    budget: int = 16
    grid_points: int = 8
    # analytic test objective peaking at this D instead of simulation
    surrogate_optimum: float | None = None


@dataclass(frozen=True)
class PsdSection:
    # slow drive: a tone period of 200 model-time units is long against the
    # well-hopping time, so the particle follows the tilt of the wells
    noise_d: float = 0.3
    samples: int = 4096
    sample_period: float = 20.0
    substeps: int = 400
    noise_entry: str = "internal"


@dataclass(frozen=True)
class DownconvertSection:
    pilots_hz: tuple[float, ...] = ATSC_PILOTS_HZ
    mixers_hz: tuple[float, ...] = (309435.0, 328835.0)
    pilot_offsets_hz: tuple[float, ...] = (-10.0, 0.0, 10.0)
    amplitude: float = 1.0
    sim_rate_hz: float = 1e6
    decimation: int = 10000
    cutoff_hz: float = 250000.0
    taps: int = 101
    duration_s: float = 2.56


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: RunSection = field(default_factory=RunSection)
    tone: ToneSection = field(default_factory=ToneSection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    plain: PlainSection = field(default_factory=PlainSection)
    sr: SRSection = field(default_factory=SRSection)
    roc: RocSection = field(default_factory=RocSection)
    pdwindow: PdWindowSection = field(default_factory=PdWindowSection)
    seqdelay: SeqDelaySection = field(default_factory=SeqDelaySection)
    sweep: SweepSection = field(default_factory=SweepSection)
    tune: TuneSection = field(default_factory=TuneSection)
    psd: PsdSection = field(default_factory=PsdSection)
    downconvert: DownconvertSection = field(
        default_factory=DownconvertSection
    )

    # region Derived scenario objects
    @property
    def kind(self) -> str:
        return self.experiment.kind

    @property
    def sample_rate_hz(self) -> float:
        return self.tone.sample_rate_hz

    @property
    def sample_period(self) -> float:
        """Model time of one input sample for the SR integrator."""
        if self.sr.time_base == "seconds":
            return 1.0 / self.sample_rate_hz
        return 1.0

    @property
    def integrator_period(self) -> float | None:
        """sample_period for IntegratorConfig; None integrates in seconds."""
        return None if self.sr.time_base == "seconds" else 1.0

    @property
    def transient(self) -> int:
        discard = self.sr.discard_transient
        return self.plain.nfft if discard is None else discard

    @property
    def params(self) -> SRParams:
        return SRParams(self.sr.a, self.sr.b)

    def base_seed(self) -> SeedPath:
        eid = experiment_id(self.kind)
        return SeedPath(self.experiment.master_seed, (eid,))

    def tone_spec(self) -> ToneSpec:
        freq = self.tone.freq_hz
        if self.tone.bin_aligned:
            width = self.sample_rate_hz / self.plain.nfft
            freq = round(freq / width) * width
        return ToneSpec(freq, self.tone.amplitude, self.tone.phase_rad)

    def h1_tone(self) -> ToneSpec | None:
        return self.tone_spec() if self.channel.signal_present else None

    def variance_for(self, snr_db: float) -> float:
        return noise_variance_for_snr(self.tone.amplitude, snr_db)

    def integrator(self, added_noise_d: float = 0.0) -> IntegratorConfig:
        return IntegratorConfig.for_stream(
            self.sample_rate_hz,
            substeps_per_sample=self.sr.substeps,
            sample_period=self.integrator_period,
            added_noise_d=added_noise_d,
            discard_transient=self.transient,
        )

    def detector(
        self,
        name: str,
        variance: float,
        window: int | None = None,
    ) -> BlockDetectorConfig:
        """
        Block detector for one branch ('plain' or 'sr'). The plain energy
        detector scans every non-DC bin; the SR branch is tuned to the tone
        and reads its output in the bins around it.
        """
        pretreat = None
        pilot_freq_hz = None
        if name == "sr":
            pilot_freq_hz = self.tone_spec().freq_hz
            injected = injected_noise_for(
                self.sr.noise_d, variance, self.sample_period
            )
            pretreat = SRPretreatment(self.params, self.integrator(injected))
        elif name != "plain":
            raise InputValidationError(f"not a detector branch: {name}")
        return BlockDetectorConfig(
            nfft=self.plain.nfft,
            sensing_window_samples=window or self.plain.sensing_window,
            pretreat=pretreat,
            sample_rate_hz=self.sample_rate_hz,
            pilot_freq_hz=pilot_freq_hz,
            pilot_tol_bins=self.sr.pilot_tol_bins,
        )

    def sweep_config(self, samples: int | None = None) -> SweepConfig:
        return SweepConfig(
            samples=samples or self.sweep.samples,
            nfft=self.plain.nfft,
            overlap_fraction=self.sweep.overlap,
            sample_rate_hz=self.sample_rate_hz,
            substeps_per_sample=self.sr.substeps,
            sample_period=self.integrator_period,
            discard_transient=self.transient,
            signal_halfwidth_bins=self.sweep.signal_halfwidth_bins,
            guard_bins=self.sweep.guard_bins,
            noise_entry=self.sweep.noise_entry,
        )

    def psd_sweep_config(self) -> SweepConfig:
        return replace(
            self.sweep_config(samples=self.psd.samples),
            sample_period=self.psd.sample_period,
            substeps_per_sample=self.psd.substeps,
            noise_entry=self.psd.noise_entry,
        )

    # endregion

    def with_overrides(
        self,
        kind: str | None = None,
        seed: int | None = None,
        trials: int | None = None,
        output: str | None = None,
    ) -> "ExperimentConfig":
        run = self.experiment
        if kind is not None:
            if run.kind and run.kind != kind:
                raise ConfigError(
                    f"[experiment] kind = {run.kind!r} does not match the "
                    f"'{kind}' subcommand"
                )
            run = replace(run, kind=kind)
        if seed is not None:
            run = replace(run, master_seed=seed)
        if trials is not None:
            run = replace(run, trials=trials)
        if output is not None:
            run = replace(run, output=output)
        return replace(self, experiment=run)

    def validate(self) -> "ExperimentConfig":
        _require(self.kind in KINDS, "experiment", "kind", f"one of {KINDS}")
        _require(self.experiment.trials >= 1, "experiment", "trials", ">= 1")
        _require(
            self.experiment.master_seed >= 0,
            "experiment",
            "master-seed",
            ">= 0",
        )
        _require(
            self.sr.time_base in TIME_BASES,
            "sr",
            "time-base",
            str(TIME_BASES),
        )
        _require(self.sr.noise_d >= 0, "sr", "noise-d", ">= 0")
        _require(bool(self.channel.snr_db), "channel", "snr-db", "non-empty")
        for section, names in (
            ("roc", self.roc.detectors),
            ("pdwindow", self.pdwindow.detectors),
        ):
            _require(
                bool(names) and set(names) <= set(DETECTORS),
                section,
                "detectors",
                f"a non-empty subset of {DETECTORS}",
            )
        _require(
            bool(self.seqdelay.detectors)
            and set(self.seqdelay.detectors) <= {"plain", "sr"},
            "seqdelay",
            "detectors",
            "a non-empty subset of ('plain', 'sr')",
        )
        _require(
            bool(self.seqdelay.gammas or self.seqdelay.target_pfas),
            "seqdelay",
            "gammas",
            "set, or target-pfas set",
        )
        _require(self.seqdelay.horizon >= 1, "seqdelay", "horizon", ">= 1")
        _require(self.roc.points >= 2, "roc", "points", ">= 2")
        _require(
            self.psd.sample_period > 0, "psd", "sample-period", "> 0"
        )
        _require(self.psd.substeps >= 1, "psd", "substeps", ">= 1")
        windows = list(self.pdwindow.windows)
        _require(
            bool(windows) and windows == sorted(set(windows)),
            "pdwindow",
            "windows",
            "a strictly increasing list",
        )
        _require(
            0 < self.pdwindow.target_pfa < 1,
            "pdwindow",
            "target-pfa",
            "in (0, 1)",
        )
        _require(
            all(0 < pfa < 1 for pfa in self.seqdelay.target_pfas),
            "seqdelay",
            "target-pfas",
            "values in (0, 1)",
        )
        _require(
            len(self.downconvert.pilots_hz)
            == len(self.downconvert.mixers_hz),
            "downconvert",
            "mixers-hz",
            "one mixer per pilot",
        )
        # Building the domain objects runs their own checks
        try:
            self.tone_spec()
            self.sweep_config()
            self.psd_sweep_config().integrator()
            self.detector("sr", self.variance_for(self.channel.snr_db[0]))
            for window in windows:
                self.detector("plain", 1.0, window)
        except InputValidationError as err:
            raise ConfigError(str(err)) from err
        return self


def _require(ok: bool, section: str, key: str, expected: str) -> None:
    if not ok:
        raise ConfigError(f"[{section}] {key}: expected {expected}")


# endregion


# region Loading and echo
def load_config(path: str | Path) -> ExperimentConfig:
    cfg_path = Path(path)
    if not cfg_path.is_file():
        raise ConfigError(f"config file not found: {cfg_path}")
    try:
        return Binder(ExperimentConfig).parse_toml(cfg_path)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{cfg_path}: invalid TOML: {err}") from err
    except (TypeError, ValueError, KeyError) as err:
        raise ConfigError(f"{cfg_path}: {err}") from err


def _toml_table(obj) -> dict:
    table = {}
    for f in fields(obj):
        value = getattr(obj, f.name)
        if value is None:
            continue
        key = f.name.replace("_", "-")
        if is_dataclass(value):
            table[key] = _toml_table(value)
        elif isinstance(value, tuple):
            table[key] = list(value)
        else:
            table[key] = value
    return table


def config_to_toml(cfg: ExperimentConfig) -> str:
    return tomlkit.dumps(_toml_table(cfg))


def config_schema(kind: str) -> str:
    """Default configuration of a kind, as a commented TOML document."""
    doc = config_to_toml(ExperimentConfig(RunSection(kind=kind)))
    return "Configuration schema (TOML, defaults shown):\n\n" + doc


# endregion


def make_table(cfg: ExperimentConfig, frame) -> ResultTable:
    return ResultTable(
        kind=cfg.kind,
        frame=frame,
        master_seed=cfg.experiment.master_seed,
        trials=cfg.experiment.trials,
        # the output path does not affect results
        config_toml=config_to_toml(
            replace(cfg, experiment=replace(cfg.experiment, output=None))
        ),
    )


def simulate_branch(
    cfg: ExperimentConfig,
    name: str,
    variance: float,
    seed: SeedPath,
    tone: ToneSpec | None = None,
    window: int | None = None,
    workers: int = 1,
    progress: bool = False,
):
    """Block metrics of one detector branch over cfg's trial count."""
    return simulate_metrics(
        cfg.detector(name, variance, window),
        variance,
        cfg.experiment.trials,
        seed,
        tone=tone,
        workers=workers,
        progress=progress,
    )
