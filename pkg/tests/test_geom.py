import numpy as np
import pytest

from twinloops.geom import (
    TWO_PI,
    NearAntipode,
    NonGenericSlice,
    SliceHitsEndpoint,
    StepTooLarge,
    angle_diff,
    lift_angle_path,
    lift_samples,
    sample_refined,
    signed_crossings,
    slice_crossings,
    stereo_chart,
    wrap_angle,
)


def test_wrap_and_diff():
    assert wrap_angle(TWO_PI) == 0.0
    assert wrap_angle(-0.5) == pytest.approx(TWO_PI - 0.5)
    d = angle_diff(np.linspace(-20, 20, 101), 0.3)
    assert np.all(d >= -np.pi) and np.all(d < np.pi)


def test_lift_full_turns():
    s = np.linspace(0, 3 * TWO_PI, 200)
    assert lift_angle_path(wrap_angle(s)) == pytest.approx(3 * TWO_PI)
    assert lift_angle_path(wrap_angle(-s)) == pytest.approx(-3 * TWO_PI)


def test_lift_rejects_big_steps():
    with pytest.raises(StepTooLarge):
        lift_samples([0.0, np.pi])


def test_sample_refined_doubles_until_resolved():
    x, y = sample_refined(lambda z: 40 * z, 0.0, 1.0, n0=4)
    assert np.max(np.abs(angle_diff(y[1:], y[:-1]))) < np.pi / 4
    assert lift_angle_path(y) == pytest.approx(40.0)


def test_slice_crossings_signs():
    up = wrap_angle(np.linspace(0.1, 0.1 + 2 * TWO_PI, 400))
    assert signed_crossings(up, 1.0) == 2
    assert signed_crossings(up[::-1], 1.0) == -2
    back_and_forth = wrap_angle(np.concatenate([np.linspace(0.5, 1.5, 50), np.linspace(1.5, 0.5, 50)]))
    events = slice_crossings(back_and_forth, 1.0)
    assert [e.sign for e in events] == [1, -1]


def test_slice_endpoint_and_tangency():
    with pytest.raises(SliceHitsEndpoint):
        slice_crossings([1.0, 1.2], 1.0)
    with pytest.raises(NonGenericSlice):
        slice_crossings([0.5, 1.0, 0.5], 1.0)
    # half-open rule: touching the slice while passing through counts once
    assert signed_crossings([0.5, 1.0, 1.5], 1.0) == 1


def test_chart_orientation_and_inverse():
    rng = np.random.default_rng(1)
    for _ in range(50):
        c = rng.normal(size=4)
        chart = stereo_chart(c)
        assert np.linalg.det(np.vstack([chart.center, chart.basis])) == pytest.approx(1.0)
        v = chart.center + 0.3 * rng.normal(size=4)
        v /= np.linalg.norm(v)
        assert np.allclose(chart.inverse(chart.forward(v)), v, atol=1e-12)
        D = chart.derivative(v)
        h = 1e-6
        for k in range(4):
            e = np.zeros(4)
            e[k] = h
            fd = (chart.forward(v + e) - chart.forward(v - e)) / (2 * h)
            assert np.allclose(D[:, k], fd, atol=1e-6)


def test_chart_antipode():
    chart = stereo_chart([1.0, 0, 0, 0])
    with pytest.raises(NearAntipode):
        chart.forward(np.array([-1.0, 0, 0, 0]))
