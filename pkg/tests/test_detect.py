import numpy as np
import pytest

from srsense.utils.detect import (
    BlockDetectorConfig,
    DualConfig,
    SequentialState,
    SRPretreatment,
    Threshold,
    block_decide,
    block_metric,
    calibrate_dual,
    calibrate_threshold,
    cusum_trajectory,
    dual_decide,
    empirical_gamma,
    estimate_e0,
    first_alarm,
    seq_run,
    seq_update,
    simulate_metrics,
    threshold_for,
    threshold_from_samples,
    trial_stream,
    window_energies,
)
from srsense.utils.exceptions import (
    InputValidationError,
    InsufficientSamplesError,
)
from srsense.utils.seeding import SeedPath
from srsense.utils.signal import (
    Hypothesis,
    NoiseSpec,
    SampleStream,
    ToneSpec,
    gen_awgn,
    gen_sinusoid,
)
from srsense.utils.srfilter import IntegratorConfig, SRParams

FS = 100.0
ON_BIN_HZ = 10.15625


def _sr_cfg(**kwargs) -> BlockDetectorConfig:
    integrator = IntegratorConfig.for_stream(FS, discard_transient=256)
    return BlockDetectorConfig(
        pretreat=SRPretreatment(SRParams(), integrator), **kwargs
    )


def _threshold(gamma: float) -> Threshold:
    return Threshold(gamma, 0.1, 100, 0.1)


def test_block_metric_of_silence_is_zero():
    cfg = BlockDetectorConfig()

    assert block_metric(SampleStream(np.zeros(512), FS), cfg) == 0.0


def test_block_metric_of_on_bin_tone():
    # Setup data: bin 10 of a 256-point FFT
    tone = ToneSpec(10 * FS / 256, 1.0)
    stream = gen_sinusoid(tone, 512, FS)

    metric = block_metric(stream, BlockDetectorConfig())

    assert metric == pytest.approx(0.5)


def test_block_metric_needs_full_window():
    with pytest.raises(InsufficientSamplesError):
        block_metric(SampleStream(np.zeros(300), FS), BlockDetectorConfig())


def test_detector_config_validation():
    with pytest.raises(InputValidationError):
        BlockDetectorConfig(nfft=100)
    with pytest.raises(InputValidationError):
        BlockDetectorConfig(nfft=256, sensing_window_samples=300)
    cfg = _sr_cfg()
    assert cfg.blocks == 2
    assert cfg.samples_required == 768
    assert cfg.label == "sr"
    assert BlockDetectorConfig().label == "plain"
    assert cfg.with_window(1024).blocks == 4


def test_threshold_is_order_statistic():
    # Setup data
    samples = np.arange(1, 11)

    assert threshold_from_samples(samples, 0.1) == 9
    assert threshold_from_samples(samples, 0.0) == 10
    th = threshold_for(samples, 0.1)
    assert th.achieved_pfa == pytest.approx(0.1)
    assert th.calibration_trials == 10


def test_gamma_decreases_with_pfa():
    samples = np.random.default_rng(0).exponential(size=1000)

    gammas = [empirical_gamma(samples, pfa) for pfa in (0.01, 0.1, 0.5, 0.9)]

    assert gammas == sorted(gammas, reverse=True)
    assert empirical_gamma(samples, 1.0) == -np.inf
    with pytest.raises(InputValidationError):
        threshold_from_samples(samples, 1.0)


def test_block_decide_is_strict():
    th = _threshold(1.0)

    assert block_decide(1.0, th) is Hypothesis.H0
    assert block_decide(1.0 + 1e-12, th) is Hypothesis.H1


def test_calibrated_pfa_holds_on_fresh_trials():
    # Setup data
    cfg = BlockDetectorConfig()
    noise = NoiseSpec(1.0, SeedPath(0))
    seed = SeedPath(2024, (1,))

    th = calibrate_threshold(cfg, noise, 0.1, 4000, seed.child(0))
    fresh = simulate_metrics(cfg, 1.0, 4000, seed.child(1))

    assert th.achieved_pfa <= 0.1
    assert np.mean(fresh > th.gamma) == pytest.approx(0.1, abs=0.02)


@pytest.mark.slow
def test_calibrated_sr_pfa_holds_on_fresh_trials():
    cfg = _sr_cfg()
    noise = NoiseSpec(4.5, SeedPath(0))
    seed = SeedPath(2024, (2,))

    th = calibrate_threshold(cfg, noise, 0.1, 4000, seed.child(0))
    fresh = simulate_metrics(cfg, 4.5, 4000, seed.child(1))

    assert np.mean(fresh > th.gamma) == pytest.approx(0.1, abs=0.02)


def test_calibration_needs_enough_trials():
    with pytest.raises(InputValidationError):
        calibrate_threshold(
            BlockDetectorConfig(),
            NoiseSpec(1.0, SeedPath(0)),
            0.1,
            50,
            SeedPath(0),
        )


def test_simulation_is_reproducible():
    cfg = _sr_cfg()

    first = simulate_metrics(cfg, 1.0, 8, SeedPath(3))
    again = simulate_metrics(cfg, 1.0, 8, SeedPath(3))

    assert np.array_equal(first, again)


def test_seq_update_examples():
    # Setup data
    state = SequentialState(e0=1.0, gamma=2.0)

    state, fired = seq_update(state, 1.5)
    assert (state.m, fired) == (0.5, False)
    state, fired = seq_update(state, 3.0)
    assert (state.m, fired) == (2.5, True)
    state, fired = seq_update(state, 0.0)
    assert (state.m, fired) == (1.5, False)
    state, fired = seq_update(state, -10.0)
    assert (state.m, fired) == (0.0, False)
    assert state.windows_seen == 4


def test_seq_update_clamps_at_zero():
    rng = np.random.default_rng(17)

    for _ in range(10_000):
        m, e0, e_n = rng.exponential(), rng.exponential(), rng.normal()
        state = SequentialState(e0=e0, gamma=1.0, m=m)
        new, fired = seq_update(state, e_n)
        assert new.m >= 0.0
        assert new.m == pytest.approx(max(m + e_n - e0, 0.0))
        assert fired == (new.m > 1.0)


def test_first_alarm_is_one_based():
    trajectory = np.array([0.0, 0.5, 3.0, 4.0])

    assert first_alarm(trajectory, 1.0) == 3
    assert first_alarm(trajectory, 10.0) is None
    assert np.array_equal(
        cusum_trajectory([1.0, 1.5, 0.0, 4.0], 1.0), [0.0, 0.5, 0.0, 3.0]
    )


def test_seq_run_alarms_quickly_at_zero_db():
    # Setup data: A^2/2 equal to the noise variance
    cfg = BlockDetectorConfig(pilot_freq_hz=ON_BIN_HZ, pilot_tol_bins=2)
    n = 10 * cfg.nfft
    tone = gen_sinusoid(ToneSpec(ON_BIN_HZ, 0.3), n, FS)
    noise = gen_awgn(NoiseSpec(0.045, SeedPath(8)), n, FS)

    received = SampleStream(tone.samples + noise.samples, FS)

    h1 = seq_run(received, cfg, 0.005, 0.03)
    h0 = seq_run(noise, cfg, 0.005, 0.03)

    assert h1.alarm_window is not None and h1.alarm_window <= 3
    assert h0.alarm_window is None
    assert h1.trajectory.size == 10
    assert np.allclose(
        h1.trajectory,
        cusum_trajectory(window_energies(received, cfg), 0.005),
    )


def test_estimate_e0():
    # Setup data
    cfg = BlockDetectorConfig(pilot_freq_hz=ON_BIN_HZ)
    seed = SeedPath(12)

    silent = estimate_e0(cfg, NoiseSpec(0.0, seed), 100, seed=seed)
    mean_only = estimate_e0(cfg, NoiseSpec(1.0, seed), 100, 0.0, seed)
    with_margin = estimate_e0(cfg, NoiseSpec(1.0, seed), 100, 0.5, seed)

    assert silent == 0.0
    assert 0.0 < mean_only < with_margin


def test_dual_or_rule():
    # Setup data
    silence = SampleStream(np.zeros(768), FS)
    plain_cfg = BlockDetectorConfig()
    sr_cfg = _sr_cfg()

    low, high = _threshold(-1.0), _threshold(1.0)

    assert dual_decide(silence, DualConfig(low, high), plain_cfg, sr_cfg) == (
        Hypothesis.H1
    )
    assert dual_decide(silence, DualConfig(high, low), plain_cfg, sr_cfg) == (
        Hypothesis.H1
    )
    assert dual_decide(silence, DualConfig(high, high), plain_cfg, sr_cfg) == (
        Hypothesis.H0
    )
    with pytest.raises(InputValidationError):
        DualConfig(low, high, rule="and")


def test_calibrate_dual_splits_the_target():
    dual = calibrate_dual(
        BlockDetectorConfig(),
        _sr_cfg(),
        NoiseSpec(1.0, SeedPath(0)),
        0.2,
        100,
        SeedPath(31),
    )

    assert dual.plain_threshold.target_pfa == pytest.approx(0.1)
    assert dual.sr_threshold.target_pfa == pytest.approx(0.1)


def test_sequential_threshold_must_be_positive():
    with pytest.raises(InputValidationError):
        SequentialState(e0=1.0, gamma=0.0)
    with pytest.raises(InputValidationError):
        SequentialState(e0=1.0, gamma=-1.0)
    assert SequentialState(e0=1.0, gamma=np.inf).gamma == np.inf


def test_pilot_band_metric_ignores_off_pilot_tone():
    # Setup data: a strong tone far from the configured pilot
    stream = gen_sinusoid(ToneSpec(30 * FS / 256, 1.0), 512, FS)

    everywhere = block_metric(stream, BlockDetectorConfig())
    at_pilot = block_metric(
        stream, BlockDetectorConfig(pilot_freq_hz=ON_BIN_HZ)
    )

    assert everywhere == pytest.approx(0.5)
    assert at_pilot < 1e-20


def test_window_and_block_metric_share_the_bin_set():
    cfg = BlockDetectorConfig(pilot_freq_hz=ON_BIN_HZ)
    stream = gen_awgn(NoiseSpec(1.0, SeedPath(4)), 512, FS)

    energies = window_energies(stream, cfg)

    assert block_metric(stream, cfg) == pytest.approx(energies.mean())


def test_drift_sign_of_sequential_increments():
    # Setup data
    cfg = BlockDetectorConfig(pilot_freq_hz=ON_BIN_HZ)
    seed = SeedPath(2024, (7,))
    e0 = estimate_e0(cfg, NoiseSpec(1.0, seed.child(0)), 200, 0.5)

    def mean_increment(tone: ToneSpec | None) -> float:
        energies = [
            window_energies(
                trial_stream(cfg, tone, 1.0, seed.child(1, i)), cfg
            )
            for i in range(300)
        ]
        return float(np.concatenate(energies).mean() - e0)

    # 0 dB: A^2/2 equal to the noise variance
    assert mean_increment(None) < 0
    assert mean_increment(ToneSpec(ON_BIN_HZ, np.sqrt(2))) > 0


def test_metric_grows_with_snr_at_fixed_noise():
    # Setup data: common noise streams, tone amplitude sets the SNR
    cfg = BlockDetectorConfig(sensing_window_samples=4096)
    seed = SeedPath(2024, (8,))

    means = [
        simulate_metrics(
            cfg,
            1.0,
            2000,
            seed,
            tone=ToneSpec(ON_BIN_HZ, np.sqrt(2 * 10 ** (snr_db / 10))),
        ).mean()
        for snr_db in (-25.0, -20.0, -15.0, -10.0)
    ]

    assert means == sorted(means)


@pytest.mark.slow
@pytest.mark.parametrize("sr", [False, True])
def test_calibration_holds_at_ten_thousand_trials(sr):
    cfg = _sr_cfg(pilot_freq_hz=10.0) if sr else BlockDetectorConfig()
    # -20 dB for a 0.3 amplitude tone
    noise = NoiseSpec(4.5, SeedPath(0))
    seed = SeedPath(2024, (9, int(sr)))

    th = calibrate_threshold(cfg, noise, 0.1, 10_000, seed.child(0))
    fresh = simulate_metrics(cfg, 4.5, 10_000, seed.child(1))

    assert np.mean(fresh > th.gamma) == pytest.approx(0.1, abs=0.02)


@pytest.mark.slow
def test_dual_false_alarm_rate_stays_within_target():
    # Setup data
    plain_cfg = BlockDetectorConfig()
    sr_cfg = _sr_cfg(pilot_freq_hz=10.0)
    seed = SeedPath(2024, (10,))
    dual = calibrate_dual(
        plain_cfg,
        sr_cfg,
        NoiseSpec(4.5, SeedPath(0)),
        0.1,
        10_000,
        seed.child(0),
    )

    alarms = 0
    for i in range(10_000):
        trial = seed.child(1, i)
        stream = trial_stream(sr_cfg, None, 4.5, trial)
        decision = dual_decide(stream, dual, plain_cfg, sr_cfg, trial.child(1))
        alarms += decision is Hypothesis.H1

    assert alarms / 10_000 <= 0.1 + 0.02


@pytest.mark.slow
def test_step_halving_keeps_h1_metric_mean():
    # Setup data: -20 dB, channel noise alone exceeds the target intensity
    tone = ToneSpec(10.0, 0.3)
    seed = SeedPath(2024, (11,))

    means = []
    for substeps in (20, 40):
        integrator = IntegratorConfig.for_stream(
            FS, substeps_per_sample=substeps, discard_transient=256
        )
        cfg = BlockDetectorConfig(
            pretreat=SRPretreatment(SRParams(), integrator),
            pilot_freq_hz=10.0,
        )
        means.append(simulate_metrics(cfg, 4.5, 1000, seed, tone=tone).mean())

    assert abs(means[1] - means[0]) / means[0] < 0.02
