"""Star-shaped surfaces as radial graphs over the sphere grid.

A surface is ``X(p) = r(p) p`` for ``p`` on a :class:`SphereGrid`.  All first
and second order anisotropic geometry is computed per node from finite
differences of the Cartesian components of X.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateMetric, InvalidSpec, NonPositiveRadius
from .grid import SphereGrid, make_grid
from .norm import NormModel, wulff_volume_closed_form, unit_ball_volume

# Real spherical harmonics (unnormalized polynomials in x, y, z).
HARMONICS = {
    "y10": lambda x, y, z: z,
    "y11": lambda x, y, z: x,
    "y20": lambda x, y, z: 0.5 * (3 * z * z - 1),
    "y21": lambda x, y, z: x * z,
    "y22": lambda x, y, z: x * x - y * y,
    "y30": lambda x, y, z: 0.5 * (5 * z ** 3 - 3 * z),
    "y32": lambda x, y, z: z * (x * x - y * y),
    "y33": lambda x, y, z: x ** 3 - 3 * x * y * y,
}
DEFAULT_HARMONICS = (("y20", 0.5), ("y21", 0.5))
# a second combination, used for an independent perturbed test body
ALT_HARMONICS = (("y20", 0.5), ("y32", 0.5))

SHAPES = ("constant", "wulff", "ellipsoid", "perturbed_wulff", "shifted_sphere")


@dataclass(frozen=True)
class RadialSpec:
    """Recipe for a radial function.

    kind:
        ``constant`` (``radius``), ``wulff`` (``r0`` times the Wulff radial
        function), ``ellipsoid`` (semi-axes ``axes``), ``perturbed_wulff``
        (``wulff_radial * (1 + epsilon * Y)`` with Y a combination of
        :data:`HARMONICS`), ``shifted_sphere`` (sphere of ``radius`` centered
        at ``center``; the origin must lie inside).
    """

    kind: str = "constant"
    radius: float = 1.0
    r0: float = 1.0
    axes: tuple[float, float, float] = (1.0, 1.0, 1.0)
    epsilon: float = 0.0
    harmonics: tuple[tuple[str, float], ...] = DEFAULT_HARMONICS
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in SHAPES:
            raise InvalidSpec(f"unknown body kind {self.kind!r}")
        for name, _ in self.harmonics:
            if name not in HARMONICS:
                raise InvalidSpec(f"unknown harmonic {name!r}")
        object.__setattr__(self, "axes", tuple(float(a) for a in self.axes))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "harmonics",
                           tuple((str(n), float(c)) for n, c in self.harmonics))

    @property
    def needs_norm(self):
        return self.kind in ("wulff", "perturbed_wulff")


def harmonic_field(p, harmonics=DEFAULT_HARMONICS):
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    out = np.zeros(p.shape[:-1])
    for name, coef in harmonics:
        out = out + coef * HARMONICS[name](x, y, z)
    return out


def radial_values(spec: RadialSpec, p, norm: NormModel | None = None):
    """Evaluate the radial function of ``spec`` at unit vectors ``p``."""
    p = np.asarray(p, dtype=float)
    if spec.needs_norm and norm is None:
        raise InvalidSpec(f"body kind {spec.kind!r} requires a norm")
    if spec.kind == "constant":
        return np.full(p.shape[:-1], float(spec.radius))
    if spec.kind == "wulff":
        return spec.r0 * norm.wulff_radial(p)
    if spec.kind == "ellipsoid":
        a = np.asarray(spec.axes)
        if np.any(a <= 0):
            raise NonPositiveRadius("ellipsoid semi-axes must be positive")
        return 1.0 / np.sqrt(np.sum((p / a) ** 2, axis=-1))
    if spec.kind == "perturbed_wulff":
        return spec.r0 * norm.wulff_radial(p) * (1.0 + spec.epsilon * harmonic_field(p, spec.harmonics))
    c = np.asarray(spec.center)
    pc = p @ c
    disc = pc * pc - c @ c + spec.radius ** 2
    if c @ c >= spec.radius ** 2:
        raise NonPositiveRadius("origin is not inside the shifted sphere")
    return pc + np.sqrt(disc)


@dataclass(frozen=True, eq=False)
class RadialSurface:
    grid: SphereGrid = field(repr=False)
    r: np.ndarray = field(repr=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.shape != self.grid.shape:
            raise InvalidSpec(f"radius array shape {r.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(r)) or not np.all(r > 0):
            raise NonPositiveRadius("radial function must be positive at every node")
        object.__setattr__(self, "r", r)

    @property
    def X(self):
        return self.r[..., None] * self.grid.nodes

    def scaled(self, t: float) -> "RadialSurface":
        return RadialSurface(self.grid, t * self.r)


def make_surface(grid: SphereGrid, shape: RadialSpec, norm: NormModel | None = None) -> RadialSurface:
    return RadialSurface(grid, radial_values(shape, grid.nodes, norm))


@dataclass(frozen=True, eq=False)
class GeometryFields:
    """Per-node geometry.  ``dmu`` and ``dmuF`` already include quadrature weights."""

    X: np.ndarray
    nu: np.ndarray
    nuF: np.ndarray
    F_nu: np.ndarray
    g: np.ndarray
    h: np.ndarray
    kappaF: np.ndarray
    HF: np.ndarray
    KF: np.ndarray
    sigma: np.ndarray
    kappa: np.ndarray
    hF: np.ndarray
    dmu: np.ndarray
    dmuF: np.ndarray
    grad_rho2: np.ndarray
    A: np.ndarray

    @property
    def H(self):
        return self.kappa[..., 0] + self.kappa[..., 1]


def embedding_derivatives(grid: SphereGrid, r: np.ndarray):
    """X = r p and its first and second (theta, phi) derivatives.

    Only the scalar rho = log r is differenced; derivatives of the unit
    vector p(theta, phi) are exact.  Returns
    ``(X, X_t, X_p, X_tt, X_tp, X_pp, rho_t, rho_p)``.
    """
    rho = np.log(r)
    # derivatives of a constant are then exactly zero
    rho = rho - rho.mean()
    rt = grid.d_theta(rho)
    rp = grid.d_phi(rho)
    rtt = grid.d_theta2(rho)
    rpp = grid.d_phi2(rho)
    rtp = grid.d_theta(rp)
    P = grid.frame
    p, pt, pp, ptp, ppp = P["p"], P["p_t"], P["p_p"], P["p_tp"], P["p_pp"]
    R = r[..., None]
    a, b = rt[..., None], rp[..., None]
    X = R * p
    Xt = R * (a * p + pt)
    Xp = R * (b * p + pp)
    Xtt = R * ((rtt[..., None] + a * a - 1.0) * p + 2.0 * a * pt)
    Xtp = R * ((rtp[..., None] + a * b) * p + a * pp + b * pt + ptp)
    Xpp = R * ((rpp[..., None] + b * b) * p + 2.0 * b * pp + ppp)
    return X, Xt, Xp, Xtt, Xtp, Xpp, rt, rp


def _sym2_sqrt(M):
    w, V = np.linalg.eigh(M)
    return (V * np.sqrt(w)[..., None, :]) @ np.swapaxes(V, -1, -2)


def geometry(surface: RadialSurface, norm: NormModel) -> GeometryFields:
    """Compute ν, ν_F, curvatures, support function and area elements.

    The anisotropic shape operator is ``D^2F(ν) ∘ dν`` restricted to the
    tangent plane.  It is self-adjoint for the inner product induced by
    ``A_F(ν)^{-1}``, so its eigenvalues are taken from the symmetric matrix
    ``A^{1/2} L A^{1/2}`` where L is the isotropic shape operator in an
    orthonormal tangent frame.

    Raises
    ------
    DegenerateMetric
        If det g <= 0 at some node.
    """
    if norm.dimension != 3:
        raise InvalidSpec("surface geometry is implemented for n = 3 only")
    grid = surface.grid
    X, Xt, Xp, Xtt, Xtp, Xpp, rho_t, rho_p = embedding_derivatives(grid, surface.r)

    g11 = np.sum(Xt * Xt, -1)
    g12 = np.sum(Xt * Xp, -1)
    g22 = np.sum(Xp * Xp, -1)
    detg = g11 * g22 - g12 * g12
    if not np.all(detg > 0):
        raise DegenerateMetric("first fundamental form is degenerate")
    n = np.cross(Xt, Xp)
    nu = n / np.linalg.norm(n, axis=-1, keepdims=True)
    nu = np.where(np.sum(nu * X, -1, keepdims=True) < 0, -nu, nu)
    h11 = -np.sum(Xtt * nu, -1)
    h12 = -np.sum(Xtp * nu, -1)
    h22 = -np.sum(Xpp * nu, -1)
    g = np.stack([np.stack([g11, g12], -1), np.stack([g12, g22], -1)], -2)
    h = np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)

    A, E = norm.weingarten_factor(nu)
    J = np.stack([Xt, Xp], -1)
    C = np.swapaxes(E, -1, -2) @ J
    Cinv = np.linalg.inv(C)
    L = np.swapaxes(Cinv, -1, -2) @ h @ Cinv
    L = 0.5 * (L + np.swapaxes(L, -1, -2))
    kappa = np.linalg.eigvalsh(L)
    As = _sym2_sqrt(A)
    S = As @ L @ As
    kappaF = np.linalg.eigvalsh(0.5 * (S + np.swapaxes(S, -1, -2)))
    HF = kappaF[..., 0] + kappaF[..., 1]
    KF = kappaF[..., 0] * kappaF[..., 1]
    sigma = np.stack([np.ones_like(HF), HF, KF], -1)

    F_nu = norm.F(nu)
    nuF = norm.grad(nu)
    dmu = np.sqrt(detg) / grid.sin_theta * grid.quad_weights
    grad_rho2 = rho_t ** 2 + (rho_p / grid.sin_theta) ** 2
    return GeometryFields(
        X=X, nu=nu, nuF=nuF, F_nu=F_nu, g=g, h=h, kappaF=kappaF, HF=HF, KF=KF,
        sigma=sigma, kappa=kappa, hF=np.sum(X * nu, -1) / F_nu,
        dmu=dmu, dmuF=F_nu * dmu, grad_rho2=grad_rho2, A=A)


_FAMILY_CODES = {"euclidean": 0, "ellipsoidal": 1, "quartic": 2}


def flow_kernel(grid: SphereGrid, r: np.ndarray, norm: NormModel):
    """Lean evaluation of what the graphical flow needs at every node.

    Returns ``(H_F, F(ν), |∇ρ|^2, D)`` where D is a local diffusivity bound
    ``2 F(ν) λ_max(A_F(ν)) (1 + |∇ρ|^2) / (r H_F)^2`` used for time-step control.
    H_F is computed as tr(g^{-1} B g^{-1} h) with ``B_ij = <X_i, D^2F(ν) X_j>``,
    which equals the trace of the anisotropic shape operator.  The common
    factor r is dropped from every X derivative and restored at the end.
    D uses the largest eigenvalue of A_F(ν), the principal coefficient of the
    linearized equation, doubled to account for both tangential directions.
    """
    from ._kernel import node_kernel

    if norm.dimension != 3:
        raise InvalidSpec("surface geometry is implemented for n = 3 only")
    rho = np.log(r)
    rho = rho - rho.mean()
    rp = grid.d_phi(rho)
    derivs = [grid.d_theta(rho), rp, grid.d_theta2(rho), grid.d_phi2(rho), grid.d_theta(rp)]
    A = norm._A if norm._A is not None else np.eye(3)
    n = grid.size
    out = node_kernel(_FAMILY_CODES[norm.family], A, float(norm.spec.amplitude),
                      np.ascontiguousarray(r, dtype=float).reshape(n),
                      grid.sin_flat,
                      *[d.reshape(n) for d in derivs], *grid.frame_flat)
    if not out[4]:
        raise DegenerateMetric("first fundamental form is degenerate")
    return tuple(o.reshape(grid.shape) for o in out[:4])


def integrate(surface: RadialSurface, fields: GeometryFields, integrand, weight: str = "dmu") -> float:
    """Sum ``integrand`` against the node measure ``dmu`` or ``dmuF``."""
    if weight not in ("dmu", "dmuF"):
        raise ValueError("weight must be 'dmu' or 'dmuF'")
    w = fields.dmu if weight == "dmu" else fields.dmuF
    vals = np.broadcast_to(np.asarray(integrand, dtype=float), w.shape) * w
    return math.fsum(vals.ravel())


def anisotropic_area(surface: RadialSurface, norm: NormModel, fields: GeometryFields | None = None) -> float:
    fields = geometry(surface, norm) if fields is None else fields
    return integrate(surface, fields, 1.0, "dmuF")


def enclosed_volume(surface: RadialSurface) -> float:
    return surface.grid.integrate_sphere(surface.r ** 3) / 3.0


def wulff_boundary_area(norm: NormModel, grid: SphereGrid | None = None) -> float:
    """|∂W|_F = n |W|.

    For n = 3 this is the radial integral of F^0(p)^{-3} over the grid (a
    96x192 grid when none is given).  Higher dimensions use the closed-form
    Wulff volume, available for the Euclidean and ellipsoidal families.
    """
    n = norm.dimension
    if n == 3:
        grid = default_grid() if grid is None else grid
        # grids are fully determined by (n_theta, n_phi, order)
        cache = norm.__dict__.setdefault("_wulff_area_cache", {})
        key = (grid.n_theta, grid.n_phi, grid.order)
        if key not in cache:
            cache[key] = grid.integrate_sphere(norm.dual(grid.nodes) ** -3.0)
        return cache[key]
    vol = wulff_volume_closed_form(norm)
    if vol is None:
        raise InvalidSpec(f"no closed-form Wulff volume for family {norm.family!r} in n={n}")
    return n * vol


def wulff_volume(norm: NormModel, grid: SphereGrid | None = None) -> float:
    return wulff_boundary_area(norm, grid) / norm.dimension


_DEFAULT_GRIDS: dict = {}


def default_grid(n_theta: int = 96, n_phi: int = 192) -> SphereGrid:
    key = (n_theta, n_phi)
    if key not in _DEFAULT_GRIDS:
        _DEFAULT_GRIDS[key] = make_grid(n_theta, n_phi)
    return _DEFAULT_GRIDS[key]


def is_convex(fields: GeometryFields) -> bool:
    """Sampled convexity: min isotropic principal curvature >= -1e-8 max|kappa|."""
    k = fields.kappa
    return bool(k.min() >= -1e-8 * np.abs(k).max())


# -- export ------------------------------------------------------------------

def write_obj(surface: RadialSurface, path) -> None:
    """Triangulated lat-long mesh with a fan vertex at each pole (v/f records only)."""
    grid = surface.grid
    X = surface.X.reshape(-1, 3)
    nt, nph = grid.shape
    north = np.array([0.0, 0.0, surface.r[0].mean()])
    south = np.array([0.0, 0.0, -surface.r[-1].mean()])
    idx = lambda j, k: j * nph + (k % nph) + 1
    lines = [f"v {x:.12g} {y:.12g} {z:.12g}" for x, y, z in X]
    lines.append("v {:.12g} {:.12g} {:.12g}".format(*north))
    lines.append("v {:.12g} {:.12g} {:.12g}".format(*south))
    vn, vs = nt * nph + 1, nt * nph + 2
    for k in range(nph):
        lines.append(f"f {vn} {idx(0, k)} {idx(0, k + 1)}")
    for j in range(nt - 1):
        for k in range(nph):
            a, b = idx(j, k), idx(j, k + 1)
            c, d = idx(j + 1, k), idx(j + 1, k + 1)
            lines.append(f"f {a} {c} {d}")
            lines.append(f"f {a} {d} {b}")
    for k in range(nph):
        lines.append(f"f {vs} {idx(nt - 1, k + 1)} {idx(nt - 1, k)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_node_csv(surface: RadialSurface, fields: GeometryFields, path) -> None:
    grid = surface.grid
    th, ph = np.meshgrid(grid.theta, grid.phi, indexing="ij")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "theta", "phi", "r", "H_F", "K_F", "h_F"])
        for i, row in enumerate(zip(th.ravel(), ph.ravel(), surface.r.ravel(),
                                    fields.HF.ravel(), fields.KF.ravel(), fields.hF.ravel())):
            w.writerow([i] + [repr(float(v)) for v in row])

