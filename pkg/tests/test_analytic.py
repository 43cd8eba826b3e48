import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

import oracles
from mqm import analytic as an
from mqm.core import GaussianPacketSpec, PhysicalParams

P = PhysicalParams()
PK = GaussianPacketSpec(2.0, 0.5)


@pytest.mark.parametrize("x,t", [(0.3, 1.0), (2.0, 0.4), (3.7, 2.5), (-1.0, 1.0)])
def test_free_gaussian_matches_numerical_convolution(x, t):
    ref = oracles.propagate_free(x, t, 2.0, 0.5)
    assert abs(an.free_gaussian_1d(x, t, PK, P) - ref) <= 1e-10


def test_free_gaussian_with_drift_and_units():
    pk = GaussianPacketSpec(1.0, 0.7, k0=2.0)
    p = PhysicalParams(hbar=0.5, mass=2.0)
    for x in (0.0, 1.5, 3.0):
        ref = oracles.propagate_free(x, 1.3, 1.0, 0.7, k0=2.0, hbar=0.5, m=2.0)
        assert abs(an.free_gaussian_1d(x, 1.3, pk, p) - ref) <= 1e-10


def test_free_gaussian_initial_peak():
    assert an.free_gaussian_1d(2.0, 0.0, PK, P) == pytest.approx(1 / (np.sqrt(2j * math.pi) * 0.5), abs=1e-15)


def test_screen_value_of_free_packet_matches_printed_form():
    t = 1.0
    w = (t / 0.5) ** 2 + 0.5**2
    printed = (1 / (2 * math.pi * 0.5)) * w**-0.5 * math.exp(-4.0 / w)
    assert abs(an.free_gaussian_1d(0.0, t, PK, P)) ** 2 == pytest.approx(printed, rel=1e-13)


@given(st.floats(0, 5), st.floats(0, 3))
def test_free_modulus_symmetric_about_centre(u, t):
    a = abs(an.free_gaussian_1d(2.0 + u, t, PK, P))
    b = abs(an.free_gaussian_1d(2.0 - u, t, PK, P))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


def test_normalized_packet_keeps_unit_mass():
    val, _ = integrate.quad(lambda x: abs(an.free_gaussian_1d(x, 1.7, PK, P, normalized=True)) ** 2,
                            -30, 30, limit=200)
    assert val == pytest.approx(1.0, abs=1e-10)


@given(st.floats(0, 5), st.sampled_from(["images", "truncated", "auto"]))
def test_halfline_vanishes_at_wall(t, method):
    assert abs(an.halfline_images_1d(0.0, t, PK, P, method=method)) <= 1e-12


@pytest.mark.parametrize("x,t", [(0.4, 1.0), (1.5, 0.3), (2.8, 2.0)])
def test_halfline_truncated_matches_green_function_quadrature(x, t):
    pk = GaussianPacketSpec(0.8, 0.5, k0=0.5)  # wide packet: image shortcut not valid
    ref = oracles.propagate_halfline(x, t, 0.8, 0.5, k0=0.5)
    assert abs(an.halfline_images_1d(x, t, pk, P, method="truncated") - ref) <= 1e-10
    assert an.method_is_images(pk) is False


def test_halfline_left_side_source():
    pk = GaussianPacketSpec(-2.0, 0.5)
    mirror = GaussianPacketSpec(2.0, 0.5)
    x = np.array([-3.0, -1.0, -0.2])
    assert np.allclose(an.halfline_images_1d(x, 1.0, pk, P), -an.halfline_images_1d(-x, 1.0, mirror, P) * -1,
                       atol=1e-14)
    assert np.all(an.halfline_images_1d(-x, 1.0, pk, P) == 0)


@given(st.floats(0.05, 6.0), st.floats(0.01, 3.0))
def test_images_equal_truncated_when_packet_is_narrow(x, t):
    pk = GaussianPacketSpec(3.0, 0.25)  # sigma / x0 < 0.1
    img = an.halfline_images_1d(x, t, pk, P, method="images")
    full = an.halfline_images_1d(x, t, pk, P, method="truncated")
    free = an.free_gaussian_1d(x, t, pk, P)
    assert abs(img - full) <= 1e-10 * max(abs(free), 1e-300) + 1e-300 or abs(img - full) < 1e-30


def test_images_equal_free_minus_mirror():
    x = np.linspace(0.01, 8, 50)
    mirror = GaussianPacketSpec(-2.0, 0.5)
    diff = an.free_gaussian_1d(x, 1.0, PK, P) - an.free_gaussian_1d(-x, 1.0, PK, P)
    assert np.allclose(an.halfline_images_1d(x, 1.0, PK, P, method="images"), diff, rtol=1e-13, atol=0)
    assert mirror.x0 == -PK.x0


def test_initial_halfline_peak_image_negligible():
    val = an.halfline_images_1d(2.0, 0.0, PK, P)
    assert val == pytest.approx(an.packet_amplitude(0.5), rel=1e-13)


@pytest.mark.parametrize("method", ["images", "truncated"])
def test_halfline_gradient_matches_finite_difference(method):
    h = 1e-5
    x = np.array([h, 2 * h])
    f = an.halfline_images_1d(np.array([0.0, h, 2 * h]), 1.0, PK, P, method=method)
    fd = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    grad = an.halfline_images_gradient(0.0, 1.0, PK, P, method=method)
    assert abs(grad - fd) <= 1e-8 * max(1.0, abs(grad))
    xs = np.array([0.7, 2.2])
    cd = (an.halfline_images_1d(xs + h, 1.0, PK, P, method=method)
          - an.halfline_images_1d(xs - h, 1.0, PK, P, method=method)) / (2 * h)
    assert np.allclose(an.halfline_images_gradient(xs, 1.0, PK, P, method=method), cd, atol=1e-8)
    assert x.size == 2


def test_transverse_density_examples():
    assert an.transverse_density(0.0, 0.0, 1.0, P) == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    y = np.linspace(-5, 5, 11)
    for t in (0.0, 1.0, 7.0):
        d = an.transverse_density(y, t, 1.0, P)
        assert np.array_equal(d, d[::-1])
        assert np.all(d >= 0)
    assert an.transverse_density(0.0, 1e6, 1.0, P) < 1e-6


@pytest.mark.parametrize("t", [0.0, 0.5, 3.0])
def test_transverse_density_mass_is_time_independent(t):
    w = an.spread_width(t, 0.8, P)
    # integral of the printed form: (1/(2 pi s)) W^-1/2 * sqrt(pi W)
    expected = 1 / (2 * 0.8 * math.sqrt(math.pi))
    val, _ = integrate.quad(lambda y: an.transverse_density(y, t, 0.8, P), -np.inf, np.inf)
    assert val == pytest.approx(expected, rel=1e-10)
    assert oracles.gaussian_integral(1 / w) * (2 * math.pi * 0.8 * math.sqrt(w)) ** -1 == pytest.approx(expected)


def test_screen_density_factorises_and_peaks_at_centre():
    geom = an.SlitGeometry(2.0)
    pk = GaussianPacketSpec(2.0, 1.0, 1.0)
    y = np.linspace(-4, 4, 81)
    dens = an.screen_density_feynman(y, 1.0, geom, pk, P)
    ratio = dens / an.transverse_density(y, 1.0, 1.0, P)
    assert np.ptp(ratio) <= 1e-15 * ratio.max()
    assert np.argmax(dens) == 40
    # hand substitution: W = 2, x-factor exp(-4/2) / (2 pi sqrt 2), y-factor 1 / (2 pi sqrt 2)
    hand = math.exp(-2.0) / (2 * math.pi * math.sqrt(2)) / (2 * math.pi * math.sqrt(2))
    assert an.screen_density_feynman(0.0, 1.0, geom, pk, P) == pytest.approx(hand, rel=1e-14)
    with pytest.raises(ValueError):
        an.screen_density_feynman(0.0, 0.0, geom, pk, P)


def test_slit_rate_vanishes_without_absorption():
    geom = an.SlitGeometry(2.0)
    y, t = np.linspace(-3, 3, 7), np.linspace(0, 4, 5)
    assert np.all(an.slit_absorption_rate(y[None], t[:, None], geom, PK, PhysicalParams(lam=0.0)) == 0)


@given(st.floats(0.05, 10), st.floats(0.2, 3), st.floats(0.3, 2), st.floats(0.5, 3))
def test_slit_ratio_independent_of_y(t, x0, sx, m):
    p = PhysicalParams(mass=m, lam=0.7)
    pk = GaussianPacketSpec(x0, sx, 1.3)
    geom = an.SlitGeometry(x0)
    y = np.linspace(-6, 6, 41)
    ratio = an.slit_absorption_rate(y, t, geom, pk, p) / an.screen_density_feynman(y, t, geom, pk, p)
    assert np.ptp(ratio) <= 1e-9 * np.max(ratio)
    assert np.all(np.abs(ratio / an.relative_brightness(t, geom, pk, p) - 1) <= 1e-12)


def test_relative_brightness_forms_agree_in_natural_units():
    geom, pk = an.SlitGeometry(2.0), GaussianPacketSpec(2.0, 1.0)
    for t in (0.0, 0.5, 2.0):
        assert an.relative_brightness(t, geom, pk, P) == pytest.approx(
            an.relative_brightness_simplified(t, geom, pk, P), rel=1e-14)


def test_relative_brightness_simplified_at_t0():
    geom, pk = an.SlitGeometry(1.5), GaussianPacketSpec(1.5, 0.6)
    p = PhysicalParams(mass=1.7, lam=0.3)
    assert an.relative_brightness_simplified(0.0, geom, pk, p) == pytest.approx(
        4 * 1.5**2 * 0.3 / (1.7**2 * 0.6**8), rel=1e-14)


def test_relative_brightness_decreasing():
    geom = an.SlitGeometry(2.0)
    t = np.linspace(0, 10, 101)
    assert np.all(np.diff(an.relative_brightness(t, geom, PK, P)) < 0)


def test_slit_velocity_density_examples():
    assert an.slit_velocity_density(0.0) == 1.0
    assert an.slit_velocity_density(2.0) == pytest.approx(0.0, abs=1e-30)
    assert an.slit_velocity_density(1.0) == pytest.approx((2 / math.pi) ** 2, rel=1e-14)
    k = np.linspace(-9, 9, 181)
    v = an.slit_velocity_density(k)
    assert np.all((v >= 0) & (v <= 1)) and np.allclose(v, v[::-1])


@given(st.floats(0, 5), st.integers(1, 300), st.floats(1.6, 4))
def test_box_expansion_zero_at_walls_and_centre(t, n_max, y0):
    vals = an.box_expansion(np.array([-y0, 0.0, y0]), t, y0, n_max)
    assert np.all(vals == 0)


def test_box_expansion_truncation_convergence():
    a = an.box_expansion(1.0, 0.0, 2.0, 200)
    b = an.box_expansion(1.0, 0.0, 2.0, 400)
    assert abs(a - b) <= 1e-3
    assert abs(a - b) <= an.box_tail_bound(1.0, 2.0, 200)


def test_box_expansion_rejects_points_outside():
    with pytest.raises(ValueError):
        an.box_expansion(2.5, 0.0, 2.0)


def test_standard_box_variant_conserves_norm():
    y0 = 3.0
    y = np.linspace(-y0, y0, 4001)
    norms = [np.trapezoid(np.abs(an.box_expansion(y, t, y0, 400, P, "standard")) ** 2, y) for t in (0.0, 0.8)]
    assert norms[0] == pytest.approx(1.0, abs=5e-3)
    assert norms[1] == pytest.approx(norms[0], rel=1e-6)


def test_box_expansion_time_grid_broadcasts():
    y = np.linspace(-2, 2, 9)
    t = np.array([0.1, 0.2])
    grid = an.box_expansion(y[None, :], t[:, None], 2.0, 32)
    assert grid.shape == (2, 9)
    assert np.allclose(grid[1], an.box_expansion(y, 0.2, 2.0, 32))


def test_slit_geometry_invariants():
    with pytest.raises(ValueError):
        an.SlitGeometry(0.0)
    with pytest.raises(ValueError):
        an.SlitGeometry(1.0, y0=1.0)
    assert an.SlitGeometry(2.0, y0=2.0).distance == 2.0
