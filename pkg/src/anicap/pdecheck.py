"""Finite-difference checks of anisotropic p-harmonicity and capacity flux.

The anisotropic p-Laplacian at a regular point is

    Δ_{F,p} u = F^{p-2}(Du) (F F_ij + (p-1) F_i F_j)(Du) u_ij.

Derivatives of the field are taken by fourth-order central differences with
a step proportional to |x|, so the check never uses closed forms of F^0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CriticalPoint, InvalidExponent, LevelSetNotFound
from .grid import SphereGrid
from .norm import NormModel, sphere_directions


@dataclass(frozen=True)
class ScalarField:
    """A deterministic scalar field on R^n minus ``singular``."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    dimension: int = 3
    singular: str = ""

    def __call__(self, x):
        return self.evaluator(np.asarray(x, dtype=float))


def wulff_potential(norm: NormModel, r0: float, p: float, n: int | None = None) -> ScalarField:
    """u(x) = (F^0(x)/r0)^{-(n-p)/(p-1)}: equal to 1 on r0 ∂W, decaying at infinity."""
    n = norm.dimension if n is None else n
    if not 1 < p < n:
        raise InvalidExponent(f"p must lie in (1, {n}), got {p}")
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    e = -(n - p) / (p - 1.0)
    return ScalarField(lambda x: (norm.dual(x) / r0) ** e, n, "x = 0")


# fourth-order central stencils
_D1 = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))
_D2 = ((-2, -1.0 / 12), (-1, 16.0 / 12), (0, -30.0 / 12), (1, 16.0 / 12), (2, -1.0 / 12))


def _stencil(n):
    # offsets (in steps) and weight tensors for u, Du and D^2u
    offsets = [np.zeros(n)]
    w_grad, w_hess = [np.zeros(n)], [np.zeros((n, n))]
    w_hess[0] += np.diag(np.full(n, _D2[2][1]))
    eye = np.eye(n)
    for i in range(n):
        for k, w in _D1:
            offsets.append(k * eye[i])
            g = np.zeros(n)
            g[i] = w
            h = np.zeros((n, n))
            h[i, i] = dict(_D2)[k]
            w_grad.append(g)
            w_hess.append(h)
    for i in range(n):
        for j in range(i + 1, n):
            for a, wa in _D1:
                for b, wb in _D1:
                    offsets.append(a * eye[i] + b * eye[j])
                    h = np.zeros((n, n))
                    h[i, j] = h[j, i] = wa * wb
                    w_grad.append(np.zeros(n))
                    w_hess.append(h)
    return np.array(offsets), np.array(w_grad), np.array(w_hess)


def fd_derivatives(field: ScalarField, x, step):
    """(u, Du, D^2u) at points ``x`` (shape (..., n)) by fourth-order differences.

    ``step`` is the absolute step, a scalar or one value per point.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    offsets, wg, wh = _stencil(n)
    step = np.asarray(step, dtype=float)[..., None, None]
    vals = field(x[..., None, :] + step * offsets)
    s = step[..., 0]
    grad = np.einsum("...k,ki->...i", vals, wg) / s
    hess = np.einsum("...k,kij->...ij", vals, wh) / s[..., None] ** 2
    return vals[..., 0], grad, hess


def anisotropic_p_laplacian(norm: NormModel, field: ScalarField, x, p: float, h: float):
    """Δ_{F,p} u at ``x`` (one point or an array of points) with relative step ``h``.

    The absolute step is h |x|.

    Raises
    ------
    CriticalPoint
        If |Du| < 1e-8 |u| / |x|.
    """
    x = np.asarray(x, dtype=float)
    if not h > 0:
        raise ValueError("step must be positive")
    scale = np.linalg.norm(x, axis=-1)
    u, du, d2u = fd_derivatives(field, x, h * scale)
    gnorm = np.linalg.norm(du, axis=-1)
    if np.any(gnorm < 1e-8 * np.abs(u) / scale) or np.any(gnorm == 0):
        raise CriticalPoint("|Du| vanishes at a sample point")
    F = norm.F(du)
    g = norm.grad(du)
    coef = F[..., None, None] * norm.hess(du) + (p - 1.0) * g[..., :, None] * g[..., None, :]
    res = F ** (p - 2.0) * np.sum(coef * d2u, axis=(-2, -1))
    return float(res) if res.ndim == 0 else res


def classical_p_laplacian(field: ScalarField, x, p: float, h: float) -> float:
    """|Du|^{p-2} (Δu + (p-2) Du·D^2u·Du / |Du|^2), the isotropic operator."""
    x = np.asarray(x, dtype=float)
    _, du, d2u = fd_derivatives(field, x, h * np.linalg.norm(x, axis=-1))
    s = np.sum(du * du, axis=-1)
    quad = np.einsum("...i,...ij,...j->...", du, d2u, du)
    res = s ** ((p - 2.0) / 2.0) * (np.trace(d2u, axis1=-2, axis2=-1) + (p - 2.0) * quad / s)
    return float(res) if res.ndim == 0 else res


def shell_points(norm: NormModel, count: int = 100, lo: float = 1.5, hi: float = 3.0):
    """Deterministic points with lo <= F^0(x) <= hi."""
    dirs = sphere_directions(count, norm.dimension)
    levels = lo + (hi - lo) * ((np.arange(count) * 0.6180339887498949) % 1.0)
    return dirs * (levels / norm.dual(dirs))[:, None]


def residual_survey(norm: NormModel, field: ScalarField, p: float, points, steps=(0.02, 0.01, 0.005)):
    """Rows ``(point index, h, residual)`` for every point and step."""
    rows = []
    points = np.asarray(points, dtype=float)
    for h in steps:
        res = anisotropic_p_laplacian(norm, field, points, p, h)
        rows.extend((i, float(h), float(v)) for i, v in enumerate(np.atleast_1d(res)))
    return rows


def max_residuals(rows):
    out: dict = {}
    for _, h, res in rows:
        out[h] = max(out.get(h, 0.0), abs(res))
    return out


def convergence_slope(max_by_step: dict) -> float:
    """Least-squares slope of log max|residual| against log h."""
    hs = sorted(max_by_step)
    return float(np.polyfit(np.log(hs), np.log([max_by_step[h] for h in hs]), 1)[0])


def write_survey_csv(rows, points, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        n = len(points[0])
        w.writerow(["point", *[f"x{i}" for i in range(n)], "h", "residual"])
        for i, h, res in rows:
            w.writerow([i, *[repr(float(c)) for c in points[i]], repr(h), repr(float(res))])


def _level_radius(field, dirs, level, lo=1e-6, hi=1e6, rtol=1e-12):
    # vectorized bisection for u(s p) = level along each direction, u decreasing in s
    m = dirs.shape[0]
    a = np.ones(m)
    b = np.ones(m)
    for _ in range(80):
        up = field(dirs * a[:, None]) <= level
        if not np.any(up):
            break
        a = np.where(up, a * 0.5, a)
        if a.min() < lo:
            raise LevelSetNotFound("level set not bracketed from inside")
    for _ in range(80):
        down = field(dirs * b[:, None]) >= level
        if not np.any(down):
            break
        b = np.where(down, b * 2.0, b)
        if b.max() > hi:
            raise LevelSetNotFound("level set not bracketed from outside")
    while np.any(b - a > rtol * b):
        mid = 0.5 * (a + b)
        inside = field(dirs * mid[:, None]) > level
        a = np.where(inside, mid, a)
        b = np.where(inside, b, mid)
    return 0.5 * (a + b)


def flux_capacity(norm: NormModel, field: ScalarField, p: float, level: float,
                  grid: SphereGrid, h: float = 1e-3) -> float:
    """∫_{u = level} F^p(Du) / |Du| dμ over the star-shaped level set.

    On the radial graph s(p) p the area element is s^2 dσ / |<ν, p>| with
    ν = Du/|Du|, so the integrand becomes F^p(Du) s^2 / |<Du, p>| and needs
    no derivatives of s.

    Raises
    ------
    LevelSetNotFound
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    dirs = grid.nodes.reshape(-1, 3)
    s = _level_radius(field, dirs, level)
    X = dirs * s[:, None]
    step = (h * s)[:, None]
    du = np.zeros_like(X)
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        for k, w in _D1:
            du[:, i] += w * field(X + k * step * e)
        du[:, i] /= step[:, 0]
    radial = np.abs(np.sum(du * dirs, axis=-1))
    if not np.all(radial > 0):
        raise LevelSetNotFound("level set is not radially transversal")
    vals = norm.F(du) ** p * s * s / radial
    return math.fsum((vals.reshape(grid.shape) * grid.quad_weights).ravel())
