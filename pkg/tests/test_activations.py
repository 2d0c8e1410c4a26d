"""Activation functions: landmark locations, derivative correctness,
bounds, and limiting behaviour."""
import numpy as np
import pytest

from tdtetris.activations import (
    ActivationKind,
    activate,
    activate_derivative,
    sigmoid,
)

ALL_KINDS = list(ActivationKind)


def _bisect_root(f, lo, hi, iters=200):
    """Root of f on [lo, hi] (f must change sign) by bisection."""
    flo = f(lo)
    assert flo * f(hi) < 0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if flo * f(mid) <= 0:
            hi = mid
        else:
            lo, flo = mid, f(mid)
    return 0.5 * (lo + hi)


def _locate_extremum(kind, lo, hi):
    """Stationary point of the activation on [lo, hi]: coarse grid to
    bracket the derivative's sign change, then bisection on the
    derivative."""
    grid = np.linspace(lo, hi, 2001)
    d = activate_derivative(kind, grid)
    sign_change = np.nonzero(np.diff(np.sign(d)) != 0)[0]
    assert sign_change.size >= 1
    i = sign_change[0]
    z = _bisect_root(lambda t: activate_derivative(kind, t),
                     grid[i], grid[i + 1])
    return z, activate(kind, z)


def test_silu_global_minimum_location_and_value():
    z, val = _locate_extremum(ActivationKind.SILU, -5.0, 0.0)
    assert abs(z - (-1.278)) < 0.01
    assert abs(val - (-0.2785)) < 0.005
    # it is a genuine global minimum over a wide range
    grid = np.linspace(-50, 50, 200001)
    assert activate(ActivationKind.SILU, grid).min() >= val - 1e-9


def test_dsilu_extrema_locations_and_values():
    z_max, v_max = _locate_extremum(ActivationKind.DSILU, 0.5, 6.0)
    z_min, v_min = _locate_extremum(ActivationKind.DSILU, -6.0, -0.5)
    assert abs(z_max - 2.4) < 0.05
    assert abs(z_min - (-2.4)) < 0.05
    assert abs(v_max - 1.0998) < 0.01
    assert abs(v_min - (-0.0998)) < 0.01
    # odd symmetry of the extremum positions
    assert abs(z_max + z_min) < 1e-6


def test_dsilu_is_bounded():
    z = np.linspace(-200, 200, 400001)
    a = activate(ActivationKind.DSILU, z)
    assert a.min() > -0.11
    assert a.max() < 1.11


def test_silu_and_dsilu_are_non_monotonic():
    for kind in (ActivationKind.SILU, ActivationKind.DSILU):
        z = np.linspace(-6, 6, 1001)
        diffs = np.diff(activate(kind, z))
        assert (diffs > 0).any() and (diffs < 0).any(), kind


def test_silu_approaches_relu_for_large_inputs():
    for z in (20.0, 35.0, 50.0):
        assert abs(activate(ActivationKind.SILU, z) - z) < 1e-7
        assert abs(activate(ActivationKind.SILU, -z)) < 1e-7


def test_sigmoid_basic_values_and_stability():
    assert sigmoid(0.0) == 0.5
    assert abs(sigmoid(1.0) - 1.0 / (1.0 + np.exp(-1.0))) < 1e-15
    # extreme inputs saturate without overflow
    assert sigmoid(800.0) == 1.0
    assert sigmoid(-800.0) == 0.0
    z = np.array([-1e4, -1.0, 0.0, 1.0, 1e4])
    out = sigmoid(z)
    assert np.all(np.isfinite(out))
    assert np.all((out >= 0) & (out <= 1))
    # symmetry sigma(-z) = 1 - sigma(z)
    z = np.linspace(-30, 30, 1001)
    assert np.allclose(sigmoid(-z), 1.0 - sigmoid(z), atol=1e-15)


def test_relu_values_and_derivative_convention():
    z = np.array([-3.0, -1e-12, 0.0, 1e-12, 7.5])
    assert np.array_equal(activate(ActivationKind.RELU, z),
                          np.array([0.0, 0.0, 0.0, 1e-12, 7.5]))
    d = activate_derivative(ActivationKind.RELU, z)
    assert np.array_equal(d, np.array([0.0, 0.0, 0.0, 1.0, 1.0]))


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_derivative_matches_finite_differences(kind):
    rng = np.random.default_rng(12345)
    z = rng.uniform(-20.0, 20.0, size=10_000)
    if kind is ActivationKind.RELU:
        # the kink at 0 has no two-sided derivative
        z = z[np.abs(z) > 1e-3]
    h = 1e-4
    fd = (activate(kind, z + h) - activate(kind, z - h)) / (2 * h)
    assert np.max(np.abs(fd - activate_derivative(kind, z))) < 1e-6


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_scalar_in_scalar_out(kind):
    out = activate(kind, 0.3)
    dout = activate_derivative(kind, 0.3)
    assert isinstance(out, float) and isinstance(dout, float)
    arr = activate(kind, np.array([0.3, -0.3]))
    assert arr.shape == (2,)
    assert abs(arr[0] - out) < 1e-15


def test_kind_round_trip_from_string():
    for kind in ALL_KINDS:
        assert ActivationKind(kind.value) is kind
    with pytest.raises(ValueError):
        ActivationKind("tanh")
