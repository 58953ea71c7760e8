import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anicap.errors import DegenerateMetric, InvalidSpec, NonPositiveRadius
from anicap.grid import make_grid
from anicap.surface import (ALT_HARMONICS, RadialSpec, RadialSurface, anisotropic_area,
                            embedding_derivatives, enclosed_volume, flow_kernel, geometry,
                            integrate, is_convex, make_surface, radial_values, wulff_boundary_area,
                            wulff_volume, write_node_csv, write_obj)

BODIES = {
    "sphere": RadialSpec("constant", radius=1.0),
    "wulff": RadialSpec("wulff", r0=1.5),
    "ellipsoid": RadialSpec("ellipsoid", axes=(2.0, 1.0, 1.0)),
    "perturbed": RadialSpec("perturbed_wulff", r0=1.0, epsilon=0.1),
    "perturbed_alt": RadialSpec("perturbed_wulff", r0=1.0, epsilon=0.1, harmonics=ALT_HARMONICS),
    "shifted": RadialSpec("shifted_sphere", radius=1.0, center=(0.0, 0.0, 0.5)),
}


def ellipsoid_curvatures(X, axes):
    """Closed-form mean (sum) and Gauss curvature of x^2/a^2 + y^2/b^2 + z^2/c^2 = 1."""
    a2 = np.asarray(axes, dtype=float) ** 2
    n = np.linalg.norm(X / a2, axis=-1)
    prod = a2.prod()
    H = (a2.sum() - np.sum(X * X, axis=-1)) / (prod * n ** 3)
    K = 1.0 / (prod * n ** 4)
    return H, K


# -- construction ---------------------------------------------------------------

def test_unit_sphere(grid32, norms):
    s = make_surface(grid32, BODIES["sphere"])
    assert np.all(s.r == 1.0)
    f = geometry(s, norms["euclidean"])
    np.testing.assert_allclose(f.HF, 2.0, atol=1e-12)
    np.testing.assert_allclose(f.KF, 1.0, atol=1e-12)
    np.testing.assert_allclose(f.hF, 1.0, atol=1e-12)
    assert integrate(s, f, 1.0, "dmu") == pytest.approx(4 * math.pi, rel=1e-10)
    assert integrate(s, f, 1.0, "dmuF") == pytest.approx(4 * math.pi, rel=1e-10)
    assert enclosed_volume(s) == pytest.approx(4 * math.pi / 3, rel=1e-12)


def test_scaled_wulff_radii(grid32, norms):
    nm = norms["ellipsoidal"]
    spec = RadialSpec("wulff", r0=2.0)
    r = radial_values(spec, np.array([[1.0, 0, 0], [0, 0, 1.0]]), nm)
    np.testing.assert_allclose(r, [4.0, 2.0])


def test_bad_bodies(grid32, norms):
    with pytest.raises(NonPositiveRadius):
        make_surface(grid32, RadialSpec("perturbed_wulff", epsilon=0.9, harmonics=(("y20", 3.0),)),
                     norms["euclidean"])
    with pytest.raises(NonPositiveRadius):
        make_surface(grid32, RadialSpec("ellipsoid", axes=(1, -1, 1)))
    with pytest.raises(NonPositiveRadius):
        make_surface(grid32, RadialSpec("shifted_sphere", center=(0, 0, 1.2)))
    with pytest.raises(InvalidSpec):
        RadialSpec("torus")
    with pytest.raises(InvalidSpec):
        RadialSpec("perturbed_wulff", harmonics=(("y99", 1.0),))
    with pytest.raises(InvalidSpec):
        make_surface(grid32, RadialSpec("wulff"))
    with pytest.raises(InvalidSpec):
        RadialSurface(grid32, np.ones((3, 3)))


def test_degenerate_metric(grid32, norms):
    # a radial graph cannot produce det g <= 0, so feed a crafted non-finite field
    s = make_surface(grid32, BODIES["sphere"])
    object.__setattr__(s, "r", np.where(np.arange(grid32.size).reshape(grid32.shape) == 5, np.inf, 1.0))
    with pytest.raises((DegenerateMetric, FloatingPointError, ValueError)):
        with np.errstate(all="ignore"):
            geometry(s, norms["euclidean"])


def test_geometry_requires_n3(grid32):
    from anicap.norm import euclidean
    s = make_surface(grid32, BODIES["sphere"])
    with pytest.raises(InvalidSpec):
        geometry(s, euclidean(4))


# -- geometry oracles -------------------------------------------------------------

@pytest.mark.parametrize("r0", [0.5, 1.0, 2.0])
def test_scaled_wulff_curvatures(grid96, norm, r0):
    s = make_surface(grid96, RadialSpec("wulff", r0=r0), norm)
    f = geometry(s, norm)
    # the quartic Wulff shape is the least smooth of the three at this resolution
    tol = 2e-5 / r0
    np.testing.assert_allclose(f.kappaF, 1.0 / r0, atol=tol)
    np.testing.assert_allclose(f.HF, 2.0 / r0, atol=2 * tol)
    np.testing.assert_allclose(f.hF, r0, rtol=1e-8)
    # nu_F is the position on the unit Wulff shape
    np.testing.assert_allclose(f.nuF, f.X / r0, atol=1e-6)


def test_ellipsoid_vs_closed_form(grid96, norms, frozen):
    axes = (2.0, 1.0, 1.0)
    s = make_surface(grid96, RadialSpec("ellipsoid", axes=axes))
    f = geometry(s, norms["euclidean"])
    H, K = ellipsoid_curvatures(f.X, axes)
    np.testing.assert_allclose(f.HF, H, rtol=1e-7)
    np.testing.assert_allclose(f.KF, K, rtol=1e-7)
    # the closed form itself agrees with the frozen tip values
    tips = np.array([[2.0, 0, 0], [0, 0, 1.0]])
    Ht, _ = ellipsoid_curvatures(tips, axes)
    e = frozen["ellipsoid_211"]
    np.testing.assert_allclose(Ht, [e["H_at_x_tip"], e["H_at_z_tip"]], rtol=1e-14)
    assert integrate(s, f, 1.0, "dmu") == pytest.approx(e["area"], rel=1e-8)
    assert integrate(s, f, f.H, "dmu") == pytest.approx(e["int_H"], rel=1e-8)
    assert integrate(s, f, f.H ** 2, "dmu") == pytest.approx(e["int_H2"], rel=1e-8)
    assert integrate(s, f, f.KF, "dmu") == pytest.approx(e["int_K"], rel=1e-8)
    assert integrate(s, f, 1.0 / f.hF, "dmu") == pytest.approx(e["int_inv_support"], rel=1e-8)
    assert enclosed_volume(s) == pytest.approx(e["volume"], rel=1e-12)
    assert enclosed_volume(s) == pytest.approx(8 * math.pi / 3, rel=1e-12)


def test_ellipsoid_normal_vs_closed_form(grid48):
    from anicap.norm import euclidean
    axes = np.array([2.0, 1.0, 1.0])
    s = make_surface(grid48, RadialSpec("ellipsoid", axes=tuple(axes)))
    f = geometry(s, euclidean())
    n = f.X / axes ** 2
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    np.testing.assert_allclose(f.nu, n, atol=5e-6)


def test_grid_convergence_order_on_ellipsoid():
    from anicap.norm import euclidean
    axes = (2.0, 1.0, 1.0)
    errs = []
    for nt in (24, 48):
        g = make_grid(nt, 2 * nt, order=4)
        s = make_surface(g, RadialSpec("ellipsoid", axes=axes))
        f = geometry(s, euclidean())
        H, _ = ellipsoid_curvatures(f.X, axes)
        errs.append(np.abs(f.HF - H).max())
    assert math.log2(errs[0] / errs[1]) >= 3.0


def test_sphere_exact_at_every_resolution(norms):
    for nt in (16, 32, 64):
        g = make_grid(nt, 2 * nt, order=4)
        f = geometry(make_surface(g, RadialSpec("constant", radius=1.0)), norms["euclidean"])
        assert np.abs(f.HF - 2.0).max() < 1e-12


# -- invariants -------------------------------------------------------------------

@pytest.mark.parametrize("body", list(BODIES))
def test_pointwise_invariants(grid48, norm, body):
    s = make_surface(grid48, BODIES[body], norm)
    f = geometry(s, norm)
    np.testing.assert_allclose(np.sum(f.nuF * f.nu, -1), f.F_nu, atol=1e-12)
    np.testing.assert_allclose(norm.dual(f.nuF), 1.0, atol=1e-9)
    np.testing.assert_allclose(f.HF, f.kappaF.sum(-1), atol=1e-10)
    np.testing.assert_allclose(f.KF, f.kappaF.prod(-1), atol=1e-10)
    assert np.array_equal(f.dmuF, f.F_nu * f.dmu)
    assert np.all(f.sigma[..., 0] == 1.0)
    # tangent vectors are orthogonal to the normal
    X, Xt, Xp, *_ = embedding_derivatives(grid48, s.r)
    assert np.abs(np.sum(Xt * f.nu, -1)).max() < 1e-12 * np.abs(Xt).max() + 1e-13
    assert np.abs(np.sum(Xp * f.nu, -1)).max() < 1e-12 * np.abs(Xp).max() + 1e-13


@pytest.mark.parametrize("body", list(BODIES))
def test_gauss_bonnet_48(grid48, norm, body):
    s = make_surface(grid48, BODIES[body], norm)
    f = geometry(s, norm)
    w = wulff_boundary_area(norm, grid48)
    assert abs(integrate(s, f, f.KF, "dmuF") / w - 1) <= 2e-3


def test_gauss_bonnet_order4(norms):
    g = make_grid(96, 192, order=4)
    for nm in norms.values():
        s = make_surface(g, BODIES["perturbed"], nm)
        f = geometry(s, nm)
        assert abs(integrate(s, f, f.KF, "dmuF") / wulff_boundary_area(nm, g) - 1) <= 2e-3


@settings(max_examples=12, deadline=None)
@given(st.floats(-0.15, 0.15), st.floats(-0.15, 0.15), st.floats(-0.1, 0.1))
def test_property_scaling_covariance(a, b, c):
    from anicap.norm import quartic
    nm = quartic(0.1)
    g = make_grid(16, 32)
    p = g.nodes
    r = 1.0 + a * 0.5 * (3 * p[..., 2] ** 2 - 1) + b * p[..., 0] * p[..., 1] + c * p[..., 1] ** 3
    s = RadialSurface(g, r)
    f1, f2 = geometry(s, nm), geometry(s.scaled(2.0), nm)
    np.testing.assert_allclose(f2.kappaF, f1.kappaF / 2, rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(f2.dmuF, 4 * f1.dmuF, rtol=1e-8)
    np.testing.assert_allclose(f2.hF, 2 * f1.hF, rtol=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2))
def test_property_flow_kernel_matches_geometry(a, b):
    from anicap.norm import ellipsoidal, quartic
    g = make_grid(24, 48)
    p = g.nodes
    r = np.exp(a * p[..., 0] * p[..., 2] + b * (p[..., 1] ** 2 - 0.3))
    for nm in (ellipsoidal([[3.0, 0.4, 0], [0.4, 1.0, 0], [0, 0, 2.0]]), quartic(0.1)):
        f = geometry(RadialSurface(g, r), nm)
        HF, F_nu, grad2, diff = flow_kernel(g, r, nm)
        np.testing.assert_allclose(HF, f.HF, rtol=1e-11, atol=1e-12)
        np.testing.assert_allclose(F_nu, f.F_nu, rtol=1e-12)
        np.testing.assert_allclose(grad2, f.grad_rho2, rtol=1e-10, atol=1e-14)
        assert np.all(diff > 0)


# -- integrals and areas ------------------------------------------------------------

def test_kf_integral_euclidean(grid48):
    from anicap.norm import euclidean
    s = make_surface(grid48, BODIES["shifted"])
    f = geometry(s, euclidean())
    assert integrate(s, f, f.KF, "dmuF") == pytest.approx(4 * math.pi, rel=1e-8)


def test_integrate_weight_validation(grid32, norms):
    s = make_surface(grid32, BODIES["sphere"])
    f = geometry(s, norms["euclidean"])
    with pytest.raises(ValueError):
        integrate(s, f, 1.0, "dA")


@pytest.mark.parametrize("r0", [0.5, 2.0])
def test_wulff_area_volume_homogeneity(grid48, norm, r0):
    s = make_surface(grid48, RadialSpec("wulff", r0=r0), norm)
    w = wulff_boundary_area(norm, grid48)
    assert anisotropic_area(s, norm) == pytest.approx(r0 ** 2 * w, rel=1e-8)
    assert enclosed_volume(s) == pytest.approx(r0 ** 3 * w / 3, rel=1e-10)


def test_wulff_boundary_area_values(grid96, norms):
    assert wulff_boundary_area(norms["euclidean"], grid96) == pytest.approx(4 * math.pi, rel=1e-12)
    assert wulff_boundary_area(norms["ellipsoidal"], grid96) == pytest.approx(8 * math.pi, rel=1e-10)
    for nm in norms.values():
        s = make_surface(grid96, RadialSpec("wulff", r0=1.0), nm)
        assert anisotropic_area(s, nm) == pytest.approx(wulff_boundary_area(nm, grid96), rel=1e-8)
        assert wulff_volume(nm, grid96) == pytest.approx(wulff_boundary_area(nm, grid96) / 3)


def test_wulff_boundary_area_higher_dimension():
    from anicap.norm import ellipsoidal, euclidean, quartic
    assert wulff_boundary_area(euclidean(4)) == pytest.approx(2 * math.pi ** 2)
    assert wulff_boundary_area(ellipsoidal([4, 1, 1, 1])) == pytest.approx(4 * math.pi ** 2)
    with pytest.raises(InvalidSpec):
        wulff_boundary_area(quartic(0.1, 4))


def test_is_convex(grid48, norms):
    nm = norms["euclidean"]
    assert is_convex(geometry(make_surface(grid48, BODIES["ellipsoid"]), nm))
    dented = make_surface(grid48, RadialSpec("perturbed_wulff", epsilon=0.3,
                                              harmonics=(("y33", 1.0),)), nm)
    assert not is_convex(geometry(dented, nm))


# -- export -------------------------------------------------------------------------

def test_exports(tmp_path, grid32, norms):
    s = make_surface(grid32, BODIES["ellipsoid"])
    f = geometry(s, norms["euclidean"])
    write_obj(s, tmp_path / "s.obj")
    lines = (tmp_path / "s.obj").read_text().splitlines()
    verts = [l for l in lines if l.startswith("v ")]
    faces = [l for l in lines if l.startswith("f ")]
    assert len(verts) == grid32.size + 2
    # closed genus-0 triangulation: V - E + F = 2 with E = 3F/2
    assert len(verts) - 3 * len(faces) // 2 + len(faces) == 2
    write_node_csv(s, f, tmp_path / "n.csv")
    rows = (tmp_path / "n.csv").read_text().splitlines()
    assert rows[0].split(",") == ["node", "theta", "phi", "r", "H_F", "K_F", "h_F"]
    assert len(rows) == grid32.size + 1
