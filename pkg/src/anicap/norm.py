"""Minkowski norms, their duals, Wulff shapes and the tensor A_F.

Three families are shipped:

* ``euclidean``   -- F(xi) = |xi|
* ``ellipsoidal`` -- F(xi) = sqrt(xi^T A xi) with A symmetric positive definite
* ``quartic``     -- F(xi) = |xi| (1 + a sum_i (xi_i/|xi|)^4)

The first two have closed-form duals.  The quartic family is the genuinely
non-ellipsoidal case; its dual is computed by a sampled search followed by
projected Newton refinement on the unit sphere.

Every evaluator accepts arrays with an arbitrary number of leading axes and
the vector index last, i.e. shape ``(..., n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc
from scipy.special import ndtri

from .errors import EllipticityViolation, InvalidSpec, ZeroDirection

FAMILIES = ("euclidean", "ellipsoidal", "quartic")

_VALIDATION_SAMPLES = 2048
_CHUNK = 1024


@dataclass(frozen=True)
class NormSpec:
    """Parameters of a norm family.

    ``matrix`` is only read for the ellipsoidal family and ``amplitude`` only
    for the quartic one.
    """

    family: str = "euclidean"
    dimension: int = 3
    matrix: tuple[tuple[float, ...], ...] | None = None
    amplitude: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpec(f"unknown norm family {self.family!r}")
        if int(self.dimension) != self.dimension or self.dimension < 3:
            raise InvalidSpec("dimension must be an integer >= 3")
        if self.family == "ellipsoidal":
            if self.matrix is None:
                raise InvalidSpec("ellipsoidal norm needs a matrix")
            A = np.asarray(self.matrix, dtype=float)
            if A.shape != (self.dimension, self.dimension):
                raise InvalidSpec(
                    f"matrix shape {A.shape} does not match dimension {self.dimension}")
            if not np.allclose(A, A.T, rtol=0, atol=1e-14 * max(1.0, np.abs(A).max())):
                raise InvalidSpec("matrix is not symmetric")
            if np.linalg.eigvalsh(A).min() <= 0:
                raise InvalidSpec("matrix is not positive definite")
            object.__setattr__(self, "matrix", tuple(tuple(float(v) for v in row) for row in A))


def sphere_directions(count: int, n: int = 3) -> np.ndarray:
    """Deterministic quasi-uniform unit vectors, shape ``(count, n)``.

    For n = 3 this is the Fibonacci lattice; otherwise an unscrambled Halton
    sequence pushed through the Gaussian quantile function and normalized.
    """
    if n == 3:
        k = np.arange(count) + 0.5
        z = 1.0 - 2.0 * k / count
        s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        phi = math.pi * (3.0 - math.sqrt(5.0)) * np.arange(count)
        return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)
    u = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
    g = ndtri(u)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def tangent_basis(nu: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the hyperplane orthogonal to each ``nu``.

    Returns an array of shape ``(..., n, n-1)`` whose columns span nu^perp.
    For n = 3 the first column is the normalized projection of the coordinate
    axis least aligned with nu and the second is ``nu x e1``.
    """
    nu = np.asarray(nu, dtype=float)
    n = nu.shape[-1]
    if n == 3:
        k = np.argmin(np.abs(nu), axis=-1)
        helper = np.eye(3)[k]
        e1 = helper - np.sum(helper * nu, axis=-1, keepdims=True) * nu
        e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
        e2 = np.cross(nu, e1)
        return np.stack([e1, e2], axis=-1)
    flat = nu.reshape(-1, n)
    out = np.empty((flat.shape[0], n, n - 1))
    for i, v in enumerate(flat):
        q, _ = np.linalg.qr(np.column_stack([v, np.eye(n)]))
        basis = q[:, 1:n]
        out[i] = basis
    return out.reshape(nu.shape[:-1] + (n, n - 1))


def _check_nonzero(xi):
    s = np.linalg.norm(xi, axis=-1)
    if np.any(s == 0):
        raise ZeroDirection("direction must be nonzero")
    return s


@dataclass(frozen=True)
class NormModel:
    """A validated Minkowski norm.

    Build instances with :func:`make_norm`; the constructor does not validate.
    """

    spec: NormSpec
    ellipticity_margin: float
    dual_samples: int = 4096
    newton_iters: int = 20
    dual_tol: float = 1e-10
    _A: np.ndarray | None = field(default=None, repr=False, compare=False)
    _Ainv: np.ndarray | None = field(default=None, repr=False, compare=False)
    _dirs: np.ndarray | None = field(default=None, repr=False, compare=False)
    _dirs_F: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    @property
    def family(self) -> str:
        return self.spec.family

    @property
    def has_closed_dual(self) -> bool:
        return self.family in ("euclidean", "ellipsoidal")

    # -- F and derivatives -------------------------------------------------

    def F(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.family == "euclidean":
            return np.linalg.norm(xi, axis=-1)
        if self.family == "ellipsoidal":
            q = np.einsum("...i,ij,...j->...", xi, self._A, xi)
            return np.sqrt(np.clip(q, 0.0, None))
        s = np.linalg.norm(xi, axis=-1)
        quart = np.sum(xi ** 4, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = s + self.spec.amplitude * quart / s ** 3
        return np.where(s > 0, out, 0.0)

    def grad(self, xi):
        xi = np.asarray(xi, dtype=float)
        s = _check_nonzero(xi)[..., None]
        if self.family == "euclidean":
            return xi / s
        if self.family == "ellipsoidal":
            Axi = xi @ self._A
            return Axi / self.F(xi)[..., None]
        a = self.spec.amplitude
        quart = np.sum(xi ** 4, axis=-1)[..., None]
        return xi / s + a * (4.0 * xi ** 3 / s ** 3 - 3.0 * quart * xi / s ** 5)

    def hess(self, xi):
        xi = np.asarray(xi, dtype=float)
        n = xi.shape[-1]
        s = _check_nonzero(xi)[..., None, None]
        eye = np.eye(n)
        outer = xi[..., :, None] * xi[..., None, :]
        if self.family == "euclidean":
            return (eye - outer / s ** 2) / s
        if self.family == "ellipsoidal":
            f = self.F(xi)[..., None, None]
            g = self.grad(xi)
            return (self._A - g[..., :, None] * g[..., None, :]) / f
        a = self.spec.amplitude
        quart = np.sum(xi ** 4, axis=-1)[..., None, None]
        cube = xi ** 3
        c_x = cube[..., :, None] * xi[..., None, :]
        diag = np.zeros(xi.shape + (n,))
        idx = np.arange(n)
        diag[..., idx, idx] = xi ** 2
        h = (12.0 * diag / s ** 3
             - 12.0 * (c_x + np.swapaxes(c_x, -1, -2)) / s ** 5
             + 15.0 * quart * outer / s ** 7
             - 3.0 * quart * eye / s ** 5)
        return (eye - outer / s ** 2) / s + a * h

    def hess_form(self, xi, u, v):
        """u^T D^2F(xi) v without forming the Hessian."""
        xi = np.asarray(xi, dtype=float)
        s = _check_nonzero(xi)
        dot = lambda a, b: np.sum(a * b, axis=-1)
        uv, ux, vx = dot(u, v), dot(u, xi), dot(v, xi)
        if self.family == "ellipsoidal":
            f = self.F(xi)
            g = self.grad(xi)
            return (dot(u @ self._A, v) - dot(g, u) * dot(g, v)) / f
        base = (uv - ux * vx / s ** 2) / s
        if self.family == "euclidean":
            return base
        a = self.spec.amplitude
        quart = np.sum(xi ** 4, axis=-1)
        cube = xi ** 3
        extra = (12.0 * dot(xi * xi * u, v) / s ** 3
                 - 12.0 * (dot(u, cube) * vx + ux * dot(v, cube)) / s ** 5
                 + 15.0 * quart * ux * vx / s ** 7
                 - 3.0 * quart * uv / s ** 5)
        return base + a * extra

    def hess_trace(self, xi):
        xi = np.asarray(xi, dtype=float)
        n = xi.shape[-1]
        s = _check_nonzero(xi)
        if self.family == "euclidean":
            return (n - 1) / s
        if self.family == "ellipsoidal":
            g = self.grad(xi)
            return (np.trace(self._A) - np.sum(g * g, axis=-1)) / self.F(xi)
        quart = np.sum(xi ** 4, axis=-1)
        a = self.spec.amplitude
        return (n - 1) / s + a * (12.0 / s - 24.0 * quart / s ** 5
                                  + 15.0 * quart / s ** 5 - 3.0 * n * quart / s ** 5)

    # -- dual --------------------------------------------------------------

    def dual(self, x):
        """F^0(x); zero at the origin."""
        x = np.asarray(x, dtype=float)
        if self.family == "euclidean":
            return np.linalg.norm(x, axis=-1)
        if self.family == "ellipsoidal":
            q = np.einsum("...i,ij,...j->...", x, self._Ainv, x)
            return np.sqrt(np.clip(q, 0.0, None))
        val, _ = self._dual_solve(x)
        return val

    def dual_grad(self, x):
        """DF^0(x) for x != 0."""
        x = np.asarray(x, dtype=float)
        _check_nonzero(x)
        if self.family == "euclidean":
            return x / np.linalg.norm(x, axis=-1, keepdims=True)
        if self.family == "ellipsoidal":
            return (x @ self._Ainv) / self.dual(x)[..., None]
        _, xi = self._dual_solve(x)
        return xi / self.F(xi)[..., None]

    def _dual_solve(self, x):
        # maximize <x, xi>/F(xi) over unit xi; returns (value, maximizer)
        n = self.dimension
        shape = x.shape[:-1]
        flat = x.reshape(-1, n)
        vals = np.zeros(flat.shape[0])
        xis = np.zeros_like(flat)
        nz = np.linalg.norm(flat, axis=-1) > 0
        if np.any(nz):
            v, xi = self._dual_newton(flat[nz])
            vals[nz] = v
            xis[nz] = xi
        xis[~nz] = self._dirs[0]
        return vals.reshape(shape), xis.reshape(shape + (n,))

    def _dual_newton(self, x):
        m, n = x.shape
        best = np.empty(m, dtype=int)
        for lo in range(0, m, _CHUNK):
            ratio = (x[lo:lo + _CHUNK] @ self._dirs.T) / self._dirs_F
            best[lo:lo + _CHUNK] = np.argmax(ratio, axis=1)
        xi = self._dirs[best].copy()
        eye = np.eye(n)
        polished = False
        for _ in range(self.newton_iters + 1):
            f = self.F(xi)
            g = self.grad(xi)
            h = self.hess(xi)
            xv = np.sum(x * xi, axis=-1)
            f1, f2, f3 = f[:, None], f[:, None, None], f[:, None, None] ** 3
            grad_r = x / f1 - xv[:, None] * g / f1 ** 2
            xg = x[:, :, None] * g[:, None, :]
            hess_r = (-(xg + np.swapaxes(xg, 1, 2)) / f2 ** 2
                      + 2.0 * xv[:, None, None] * g[:, :, None] * g[:, None, :] / f3
                      - xv[:, None, None] * h / f2 ** 2)
            proj = eye - xi[:, :, None] * xi[:, None, :]
            rhs = -np.einsum("mij,mj->mi", proj, grad_r)
            tang = proj @ hess_r @ proj
            tang -= np.sum(xi * grad_r, axis=-1)[:, None, None] * proj
            mat = tang - xi[:, :, None] * xi[:, None, :]
            step = np.linalg.solve(mat, rhs[:, :, None])[:, :, 0]
            size = np.linalg.norm(step, axis=-1)
            # reject non-ascent steps; the sampled start is inside the Newton basin
            # for every shipped norm, so this only guards against pathologies
            bad = np.sum(step * -rhs, axis=-1) <= 0
            xn = np.linalg.norm(x, axis=-1, keepdims=True)
            step[bad] = (-rhs / xn)[bad]
            size = np.linalg.norm(step, axis=-1)
            scale = np.minimum(1.0, 0.2 / np.maximum(size, 1e-300))
            xi = xi + step * scale[:, None]
            xi /= np.linalg.norm(xi, axis=-1, keepdims=True)
            if polished:
                break
            if size.max() < self.dual_tol:
                polished = True
        val = np.sum(x * xi, axis=-1) / self.F(xi)
        return val, xi

    # -- derived objects ---------------------------------------------------

    def wulff_radial(self, p):
        """Radial function 1/F^0(p) of the Wulff shape."""
        return 1.0 / self.dual(p)

    def weingarten_factor(self, nu):
        """A_F(nu) as the restriction of D^2F(nu) to nu^perp.

        Returns ``(A, E)`` with ``A`` of shape ``(..., n-1, n-1)`` expressed in
        the orthonormal basis ``E`` from :func:`tangent_basis`.
        """
        nu = np.asarray(nu, dtype=float)
        _check_nonzero(nu)
        E = tangent_basis(nu)
        H = self.hess(nu)
        A = np.swapaxes(E, -1, -2) @ H @ E
        return 0.5 * (A + np.swapaxes(A, -1, -2)), E


def _hess_half_F2(model: NormModel, xi):
    f = model.F(xi)[..., None, None]
    g = model.grad(xi)
    return f * model.hess(xi) + g[..., :, None] * g[..., None, :]


def make_norm(spec: NormSpec, dual_samples: int = 4096, newton_iters: int = 20,
              dual_tol: float = 1e-10) -> NormModel:
    """Validate ``spec`` and build a :class:`NormModel`.

    The ellipticity margin is the smallest eigenvalue of Hess(F^2/2) over a
    deterministic sample of 2048 unit directions.

    Raises
    ------
    InvalidSpec
        Malformed family parameters (non-SPD matrix etc).
    EllipticityViolation
        F fails to be positive or uniformly elliptic on the sample.
    """
    n = spec.dimension
    A = Ainv = None
    if spec.family == "ellipsoidal":
        A = np.asarray(spec.matrix, dtype=float)
        Ainv = np.linalg.inv(A)
        Ainv = 0.5 * (Ainv + Ainv.T)
    dirs = sphere_directions(dual_samples, n)
    model = NormModel(spec=spec, ellipticity_margin=0.0, dual_samples=dual_samples,
                      newton_iters=newton_iters, dual_tol=dual_tol,
                      _A=A, _Ainv=Ainv, _dirs=dirs)
    sample = sphere_directions(_VALIDATION_SAMPLES, n)
    values = model.F(sample)
    if not np.all(values > 0):
        raise EllipticityViolation("F is not positive on the unit sphere")
    margin = float(np.linalg.eigvalsh(_hess_half_F2(model, sample))[:, 0].min())
    if not margin > 0:
        raise EllipticityViolation(
            f"Hess(F^2/2) has smallest sampled eigenvalue {margin:.6g} <= 0")
    return NormModel(spec=spec, ellipticity_margin=margin, dual_samples=dual_samples,
                     newton_iters=newton_iters, dual_tol=dual_tol,
                     _A=A, _Ainv=Ainv, _dirs=dirs, _dirs_F=model.F(dirs))


def euclidean(n: int = 3) -> NormModel:
    return make_norm(NormSpec("euclidean", n))


def ellipsoidal(matrix, n: int | None = None) -> NormModel:
    A = np.asarray(matrix, dtype=float)
    if A.ndim == 1:
        A = np.diag(A)
    return make_norm(NormSpec("ellipsoidal", A.shape[0] if n is None else n,
                              matrix=tuple(map(tuple, A))))


def quartic(amplitude: float, n: int = 3) -> NormModel:
    return make_norm(NormSpec("quartic", n, amplitude=float(amplitude)))


# Functional aliases matching the operation names of the public contract.

def eval_F(norm: NormModel, xi):
    return norm.F(xi)


def grad_F(norm: NormModel, xi):
    return norm.grad(xi)


def hess_F(norm: NormModel, xi):
    return norm.hess(xi)


def eval_F0(norm: NormModel, x):
    return norm.dual(x)


def wulff_radial(norm: NormModel, p):
    return norm.wulff_radial(p)


def anisotropic_weingarten_factor(norm: NormModel, nu):
    return norm.weingarten_factor(nu)[0]


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def wulff_volume_closed_form(norm: NormModel) -> float | None:
    """|W| for the families with an exact dual; ``None`` otherwise."""
    n = norm.dimension
    if norm.family == "euclidean":
        return unit_ball_volume(n)
    if norm.family == "ellipsoidal":
        return unit_ball_volume(n) * math.sqrt(np.linalg.det(norm._A))
    return None
