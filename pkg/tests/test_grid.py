import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anicap.errors import InvalidGrid
from anicap.grid import fd_weights, make_grid


@pytest.mark.parametrize("shape", [(16, 32), (24, 48), (48, 96), (96, 192)])
def test_weights_sum(shape):
    g = make_grid(*shape)
    assert math.fsum(g.quad_weights.ravel()) == pytest.approx(4 * math.pi, rel=1e-12)


def test_integrate_constant_and_y20():
    g = make_grid(16, 32)
    assert g.integrate_sphere(np.ones(g.shape)) == pytest.approx(4 * math.pi, rel=1e-12)
    z = g.nodes[..., 2]
    assert abs(g.integrate_sphere(0.5 * (3 * z * z - 1))) <= 1e-12


def test_low_order_moments_exact():
    g = make_grid(16, 32)
    x, y, z = np.moveaxis(g.nodes, -1, 0)
    assert g.integrate_sphere(x * x) == pytest.approx(4 * math.pi / 3, rel=1e-12)
    assert g.integrate_sphere(x ** 2 * y ** 2 * z ** 2) == pytest.approx(4 * math.pi / 105, rel=1e-12)


@pytest.mark.parametrize("shape", [(15, 32), (16, 30), (16, 33), (8, 64), (16.5, 32)])
def test_invalid_grid(shape):
    with pytest.raises(InvalidGrid):
        make_grid(*shape)


def test_nodes_unit_and_layout():
    g = make_grid(16, 32)
    assert g.nodes.shape == (16, 32, 3)
    assert np.allclose(np.linalg.norm(g.nodes, axis=-1), 1.0)
    assert np.all(np.diff(g.theta) > 0)
    assert g.size == 16 * 32


def test_fd_weights_reproduce_polynomials():
    x = np.array([-2.0, -0.5, 0.0, 1.0, 2.5])
    w = fd_weights(0.3, x, 2)
    for k in range(5):
        f = x ** k
        d1 = k * 0.3 ** (k - 1) if k >= 1 else 0.0
        d2 = k * (k - 1) * 0.3 ** (k - 2) if k >= 2 else 0.0
        assert w[1] @ f == pytest.approx(d1, abs=1e-12)
        assert w[2] @ f == pytest.approx(d2, abs=1e-11)


def _smooth(g):
    x, y, z = np.moveaxis(g.nodes, -1, 0)
    return np.exp(0.3 * x - 0.2 * y + 0.5 * z) + x * y * z


@pytest.mark.parametrize("order", [4, 6, 8])
def test_phi_derivatives(order):
    g = make_grid(32, 64, order=order)
    th, ph = np.meshgrid(g.theta, g.phi, indexing="ij")
    f = np.sin(th) ** 2 * np.cos(3 * ph)
    np.testing.assert_allclose(g.d_phi(f), -3 * np.sin(th) ** 2 * np.sin(3 * ph), atol=1e-3)
    np.testing.assert_allclose(g.d_phi2(f), -9 * f, atol=3e-3)


def test_theta_derivative_across_pole():
    # f = z is smooth through the poles; d/dtheta z = -sin(theta)
    g = make_grid(32, 64)
    z = g.nodes[..., 2]
    st_ = np.sin(g.theta)[:, None]
    np.testing.assert_allclose(g.d_theta(z), -st_ * np.ones(g.shape), atol=1e-10)
    np.testing.assert_allclose(g.d_theta2(z), -z, atol=1e-9)


def test_theta_derivative_parity_field():
    # d/dtheta of a smooth scalar is odd across the pole; differentiating it uses parity -1
    g = make_grid(32, 64)
    f = _smooth(g)
    d1 = g.d_theta(f)
    np.testing.assert_allclose(g.d_theta(d1, parity=-1), g.d_theta2(f), atol=1e-5)
    assert np.abs(g.d_theta(d1, parity=1) - g.d_theta2(f)).max() > 1e-2


def test_theta_convergence_order():
    errs = []
    for nt in (24, 48):
        g = make_grid(nt, 2 * nt, order=4)
        th, ph = np.meshgrid(g.theta, g.phi, indexing="ij")
        f = np.exp(np.cos(th)) * (1 + 0.3 * np.sin(th) * np.cos(ph))
        fe = (-np.sin(th) * np.exp(np.cos(th)) * (1 + 0.3 * np.sin(th) * np.cos(ph))
              + np.exp(np.cos(th)) * 0.3 * np.cos(th) * np.cos(ph))
        errs.append(np.abs(g.d_theta(f) - fe).max())
    assert math.log2(errs[0] / errs[1]) >= 3.5


def test_polar_filter():
    g = make_grid(32, 64)
    f = _smooth(g)
    out = g.polar_filter(f)
    # equatorial rings keep every resolved mode; a mode m = 20 is removed near the poles
    mid = g.n_theta // 2
    np.testing.assert_allclose(out[mid], f[mid], atol=1e-12)
    th, ph = np.meshgrid(g.theta, g.phi, indexing="ij")
    high = np.cos(20 * ph) * np.ones(g.shape)
    filt = g.polar_filter(high)
    assert np.abs(filt[0]).max() < 1e-12
    # ring means are untouched
    np.testing.assert_allclose(filt.mean(axis=1), high.mean(axis=1), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 4), st.integers(-4, 4))
def test_property_harmonic_orthogonality(l, m):
    # real harmonics of degree <= 4 integrate to 0 unless constant: exact for the 16x32 grid
    from scipy.special import sph_harm_y
    g = make_grid(16, 32)
    if abs(m) > l:
        return
    th, ph = np.meshgrid(g.theta, g.phi, indexing="ij")
    Y = sph_harm_y(l, abs(m), th, ph)
    f = Y.real if m >= 0 else Y.imag
    val = g.integrate_sphere(f)
    expect = math.sqrt(4 * math.pi) if l == 0 else 0.0
    assert val == pytest.approx(expect, abs=1e-12)
