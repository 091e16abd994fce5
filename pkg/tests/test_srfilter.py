import math

import numpy as np
import pytest

from srsense.utils.exceptions import (
    InputValidationError,
    IntegratorDivergenceError,
)
from srsense.utils.seeding import SeedPath
from srsense.utils.signal import SampleStream, ToneSpec, gen_sinusoid
from srsense.utils.srfilter import (
    IntegratorConfig,
    SRParams,
    SRState,
    barrier_height,
    channel_noise_intensity,
    filter_stream,
    injected_noise_for,
    kramers_rate,
    potential,
    stable_points,
    step,
    switching_rate,
)


def _analytic(x0: float, t: np.ndarray) -> np.ndarray:
    """Closed-form solution of dx/dt = x - x^3."""
    e = np.exp(t)
    return x0 * e / np.sqrt(1 + x0**2 * (e**2 - 1))


def test_potential_landscape():
    # Setup data
    p = SRParams()

    assert potential(1.0, p) == pytest.approx(-0.25)
    assert potential(0.0, p) == 0.0
    assert stable_points(p) == (-1.0, 1.0, 0.0)
    assert barrier_height(p) == pytest.approx(0.25)
    assert barrier_height(SRParams(2.0, 1.0)) == pytest.approx(1.0)


def test_kramers_rate_example():
    assert kramers_rate(SRParams(), 0.43) == pytest.approx(0.12585, rel=1e-3)
    with pytest.raises(InputValidationError):
        kramers_rate(SRParams(), 0.0)


def test_params_validation():
    with pytest.raises(InputValidationError):
        SRParams(a=0.0)
    with pytest.raises(InputValidationError):
        IntegratorConfig(step_h=0.0)
    with pytest.raises(InputValidationError):
        IntegratorConfig(added_noise_d=-0.1)


def test_channel_noise_bookkeeping():
    # -20 dB at A = 0.3 already exceeds the target intensity
    assert channel_noise_intensity(4.5, 1.0) == pytest.approx(2.25)
    assert injected_noise_for(0.43, 4.5, 1.0) == 0.0
    assert injected_noise_for(0.43, 0.1, 1.0) == pytest.approx(0.38)
    assert injected_noise_for(0.43, 0.1, 0.01) == pytest.approx(0.4295)


def test_step_example():
    # Setup data
    cfg = IntegratorConfig(step_h=0.01, substeps_per_sample=100)

    state = step(SRState(0.5), 0.0, SRParams(), cfg)

    assert state.x == pytest.approx(0.50375)
    assert state.t == pytest.approx(0.01)


def test_step_with_noise_needs_randomness():
    cfg = IntegratorConfig(added_noise_d=0.1)

    with pytest.raises(InputValidationError):
        step(SRState(0.0), 0.0, SRParams(), cfg)

    moved = step(
        SRState(0.0), 0.0, SRParams(), cfg, np.random.default_rng(1)
    )
    assert moved.x != 0.0


def test_filter_holds_stable_point():
    # Setup data
    stream = SampleStream(np.zeros(300), 100.0)
    cfg = IntegratorConfig.for_stream(100.0, discard_transient=0)

    out = filter_stream(stream, SRParams(), cfg)

    assert len(out) == 300
    assert np.all(out.samples == 1.0)


def test_filter_discards_transient():
    stream = SampleStream(np.zeros(300), 100.0)
    cfg = IntegratorConfig.for_stream(100.0, discard_transient=256)

    out = filter_stream(stream, SRParams(), cfg)

    assert len(out) == 44
    assert out.sample_rate_hz == 100.0


def test_filter_converges_to_analytic_solution():
    # Setup data
    stream = SampleStream(np.zeros(5), 100.0)
    t = np.arange(1, 6, dtype=float)
    exact = _analytic(0.1, t)

    errors = []
    for substeps in (20, 200):
        cfg = IntegratorConfig.for_stream(
            100.0,
            substeps_per_sample=substeps,
            initial_x=0.1,
            discard_transient=0,
        )
        out = filter_stream(stream, SRParams(), cfg)
        errors.append(np.max(np.abs(out.samples - exact)))

    assert errors[1] < 0.01
    # first order: ten times fewer steps per sample, ten times the error
    assert errors[0] / errors[1] > 5


def test_step_halving_shrinks_error():
    # Setup data
    drive = gen_sinusoid(ToneSpec(1.0, 0.3), 200, 100.0)

    outs = {}
    for substeps in (10, 20, 40):
        cfg = IntegratorConfig.for_stream(
            100.0, substeps_per_sample=substeps, discard_transient=0
        )
        outs[substeps] = filter_stream(drive, SRParams(), cfg).samples
    coarse = np.max(np.abs(outs[10] - outs[20]))
    fine = np.max(np.abs(outs[20] - outs[40]))

    assert fine < 0.7 * coarse


def test_subthreshold_drive_does_not_switch():
    # A = 0.3 is below the static switching threshold 2/(3 sqrt 3)
    drive = gen_sinusoid(ToneSpec(1.0, 0.3), 1000, 100.0)
    cfg = IntegratorConfig.for_stream(100.0, discard_transient=0)

    out = filter_stream(drive, SRParams(), cfg)

    assert np.all(out.samples > 0)
    assert switching_rate(out, SRParams()) == 0.0


@pytest.mark.parametrize("noise_d", [0.3, 0.5])
def test_switching_rate_within_factor_two_of_kramers(noise_d):
    # Setup data: 5000 model time units at h = 0.01
    fs = 10.0
    cfg = IntegratorConfig.for_stream(
        fs,
        substeps_per_sample=10,
        sample_period=None,
        added_noise_d=noise_d,
        seed=SeedPath(11, (int(noise_d * 10),)),
        discard_transient=0,
    )
    stream = SampleStream(np.zeros(50_000), fs)

    out = filter_stream(stream, SRParams(), cfg)
    rate = switching_rate(out, SRParams())
    expected = kramers_rate(SRParams(), noise_d)

    assert 0.5 < rate / expected < 2.0


def test_injected_noise_is_reproducible():
    # Setup data
    stream = SampleStream(np.zeros(400), 100.0)
    cfg = IntegratorConfig.for_stream(
        100.0, added_noise_d=0.3, seed=SeedPath(5), discard_transient=0
    )

    first = filter_stream(stream, SRParams(), cfg)
    again = filter_stream(stream, SRParams(), cfg)
    other = filter_stream(
        stream, SRParams(), cfg.with_noise(0.3, SeedPath(6))
    )

    assert np.array_equal(first.samples, again.samples)
    assert not np.array_equal(first.samples, other.samples)


def test_filter_rejects_mismatched_rate():
    stream = SampleStream(np.zeros(10), 100.0)
    cfg = IntegratorConfig(step_h=0.05, substeps_per_sample=10)

    with pytest.raises(InputValidationError):
        filter_stream(stream, SRParams(), cfg)


def test_filter_reports_divergence():
    # Setup data
    stream = SampleStream(np.zeros(10), 100.0)
    cfg = IntegratorConfig.for_stream(
        100.0, initial_x=1e4, discard_transient=0
    )

    with pytest.raises(IntegratorDivergenceError) as info:
        filter_stream(stream, SRParams(), cfg)

    assert info.value.sample_index == 0
    assert math.isnan(info.value.value) or abs(info.value.value) > 1e6


@pytest.mark.parametrize("amplitude", [0.0, 0.3])
def test_deterministic_limit_matches_fine_reference(amplitude):
    # Setup data: 10 s at 100 Hz on the physical time base
    drive = gen_sinusoid(ToneSpec(0.5, amplitude), 1000, 100.0)

    outs = []
    for substeps in (20, 2000):
        cfg = IntegratorConfig.for_stream(
            100.0,
            substeps_per_sample=substeps,
            sample_period=None,
            initial_x=0.5,
            discard_transient=0,
        )
        outs.append(filter_stream(drive, SRParams(), cfg).samples)

    assert abs(outs[0][-1] - outs[1][-1]) <= 1e-4
    assert np.max(np.abs(outs[0][-100:] - outs[1][-100:])) <= 1e-4


def test_potential_accepts_arrays():
    x = np.array([-1.0, 0.0, 1.0])

    assert np.allclose(potential(x, SRParams()), [-0.25, 0.0, -0.25])
