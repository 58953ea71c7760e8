"""Inverse anisotropic mean curvature flow of star-shaped surfaces.

The flow moves each point with velocity ν_F / H_F.  For a radial graph the
normal speed is F(ν)/H_F, which in terms of ρ = log r reads

    ∂_t ρ = F(ν) sqrt(1 + |∇ρ|^2) / (r H_F).

The scalar equation is integrated with Heun's method (explicit RK2).
Tendencies are passed through the grid's polar filter so that the stable step
is set by the equatorial spacing h.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (InvalidExponent, InvalidSpec, MeanConvexityLost, NonPositiveRadius,
                     NonPositiveSupport, NotConvex, StepLimitExceeded)
from .norm import NormModel
from .surface import (RadialSurface, flow_kernel, geometry, integrate, is_convex,
                      wulff_boundary_area)


@dataclass(frozen=True)
class FlowControls:
    """Stepping controls.

    ``dt = cfl * h**2 / D_max`` with D the local diffusivity bound returned by
    :func:`anicap.surface.flow_kernel`.  Snapshots are taken every
    ``snapshot_every`` time units (the step is shortened to land on them).
    """

    t_end: float = 1.0
    cfl: float = 0.2
    max_steps: int = 200_000
    snapshot_every: float = 0.1
    min_HF: float = 1e-8

    def __post_init__(self):
        if not self.t_end > 0:
            raise InvalidSpec("t_end must be positive")
        if not 0 < self.cfl <= 0.5:
            raise InvalidSpec("cfl must lie in (0, 0.5]")
        if self.max_steps < 1:
            raise InvalidSpec("max_steps must be positive")
        if not self.snapshot_every > 0:
            raise InvalidSpec("snapshot_every must be positive")


@dataclass
class FlowTrace:
    """Snapshots and scalar series recorded along a flow run.

    ``Tp[p][k]`` is ∫ H_F^{p-1} dμ_F on snapshot k, the foliation functional
    of the flow (F(Dψ) = H_F and |Dψ| = H_F/F(ν) on the leaves).
    """

    p_list: tuple
    wulff_area: float
    dimension: int = 3
    times: list = field(default_factory=list)
    surfaces: list = field(default_factory=list)
    area_F: list = field(default_factory=list)
    Tp: dict = field(default_factory=dict)
    hawking: list = field(default_factory=list)
    willmore: list = field(default_factory=list)
    shape_dev: list = field(default_factory=list)
    min_HF: list = field(default_factory=list)
    steps: int = 0

    def __post_init__(self):
        for p in self.p_list:
            self.Tp.setdefault(p, [])

    def record(self, t, surface, fields, dual_nodes):
        if self.times and not t > self.times[-1]:
            raise ValueError("snapshot times must increase")
        area = integrate(surface, fields, 1.0, "dmuF")
        will = integrate(surface, fields, fields.HF ** 2, "dmuF")
        self.times.append(float(t))
        self.surfaces.append(surface)
        self.area_F.append(area)
        self.willmore.append(will)
        for p in self.p_list:
            self.Tp[p].append(integrate(surface, fields, fields.HF ** (p - 1.0), "dmuF"))
        w = self.wulff_area
        self.hawking.append(math.sqrt(area / (4 * w)) * (1.0 - will / (4 * w)))
        self.shape_dev.append(shape_deviation(surface, dual_nodes))
        self.min_HF.append(float(fields.HF.min()))

    def lam(self, p: float, n: int | None = None):
        """λ(t) = ∫_t^∞ T_p^{-1/(p-1)} / ∫_0^∞ T_p^{-1/(p-1)} at the snapshot times."""
        n = self.dimension if n is None else n
        t = np.asarray(self.times)
        f = np.asarray(self.Tp[p]) ** (-1.0 / (p - 1.0))
        tail = f[-1] * (p - 1.0) / _growth_rate(p, n)
        seg = 0.5 * (f[1:] + f[:-1]) * np.diff(t)
        after = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]]) + tail
        return after / after[0]

    def rows(self):
        for k, t in enumerate(self.times):
            yield [t, self.area_F[k], *[self.Tp[p][k] for p in self.p_list],
                   self.hawking[k], self.shape_dev[k]]

    def header(self):
        return ["t", "area_F", *[f"T_p={p:g}" for p in self.p_list], "hawking", "shape_dev"]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.header())
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])


def shape_deviation(surface: RadialSurface, dual_nodes) -> float:
    """sup |r F^0(p) / r̄ - 1|, r̄ the quadrature mean of r F^0(p)."""
    s = surface.r * dual_nodes
    mean = surface.grid.integrate_sphere(s) / (4 * math.pi)
    return float(np.abs(s / mean - 1.0).max())


def _growth_rate(p, n):
    return (n - p) / (n - 1.0)


def iamcf_rhs(surface: RadialSurface, norm: NormModel, min_HF: float = 1e-8):
    """∂_t ρ at every node.

    Raises
    ------
    MeanConvexityLost
        If H_F <= min_HF at some node.
    """
    rhs, _ = _rhs(surface.grid, surface.r, norm, min_HF)
    return rhs


def _rhs(grid, r, norm, min_HF):
    HF, F_nu, grad2, diff = flow_kernel(grid, r, norm)
    if not np.all(HF > min_HF):
        raise MeanConvexityLost(f"min H_F = {HF.min():.3e} <= {min_HF:g}")
    return F_nu * np.sqrt(1.0 + grad2) / (r * HF), float(diff.max())


def run_iamcf(surface: RadialSurface, norm: NormModel, controls: FlowControls,
              p_list=(2.0,), dual_nodes=None) -> FlowTrace:
    """Integrate the flow from ``surface`` until ``controls.t_end``.

    ``dual_nodes`` (F^0 at the grid nodes) may be passed to skip the dual
    solve for norms without a closed-form dual.

    Raises
    ------
    MeanConvexityLost, StepLimitExceeded, NonPositiveRadius
    """
    grid = surface.grid
    if dual_nodes is None:
        dual_nodes = norm.dual(grid.nodes)
    trace = FlowTrace(tuple(float(p) for p in p_list), wulff_boundary_area(norm, grid),
                      norm.dimension)
    trace.record(0.0, surface, geometry(surface, norm), dual_nodes)
    rho = np.log(surface.r)
    h2 = grid.h ** 2
    t, steps, snap = 0.0, 0, 1
    # snapshot k sits at k * snapshot_every exactly (no accumulated drift)
    t_next = min(controls.snapshot_every, controls.t_end)
    k1, dmax = _rhs(grid, surface.r, norm, controls.min_HF)
    while t < controls.t_end * (1 - 1e-14):
        if steps >= controls.max_steps:
            raise StepLimitExceeded(f"{steps} steps reached at t = {t:.6g}")
        dt = controls.cfl * h2 / dmax
        landing = t + dt >= t_next * (1 - 1e-12)
        if landing:
            dt = t_next - t
        k1 = grid.polar_filter(k1)
        rho1 = rho + dt * k1
        k2, _ = _rhs(grid, _radius(rho1), norm, controls.min_HF)
        rho = rho + 0.5 * dt * (k1 + grid.polar_filter(k2))
        steps += 1
        t = t_next if landing else t + dt
        r = _radius(rho)
        k1, dmax = _rhs(grid, r, norm, controls.min_HF)
        if landing:
            surf = RadialSurface(grid, r)
            trace.record(t, surf, geometry(surf, norm), dual_nodes)
            snap += 1
            t_next = min(snap * controls.snapshot_every, controls.t_end)
    trace.steps = steps
    return trace


def _radius(rho):
    if not np.all(np.isfinite(rho)):
        raise NonPositiveRadius("radial function left the positive range")
    return np.exp(rho)


def capacity_upper_from_trace(trace: FlowTrace, p: float, n: int = 3) -> float:
    """Capacity upper estimate (∫_0^∞ T_p^{-1/(p-1)} dt)^{1-p} from a trace.

    Trapezoid on the snapshot times, then the tail past the last snapshot with
    T_p continued as T_p(t_end) exp(k (t - t_end)), k = (n-p)/(n-1).
    """
    if not 1 < p < n:
        raise InvalidExponent(f"p must lie in (1, {n}), got {p}")
    p = float(p)
    if p not in trace.Tp:
        raise KeyError(f"trace has no T_p series for p = {p}")
    t = np.asarray(trace.times)
    f = np.asarray(trace.Tp[p]) ** (-1.0 / (p - 1.0))
    body = math.fsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))
    tail = f[-1] * (p - 1.0) / _growth_rate(p, n)
    return (body + tail) ** (1.0 - p)


def normal_flow_Tp_coeffs(surface: RadialSurface, norm: NormModel, fields=None):
    """(∫σ_0 dμ_F, ∫σ_1 dμ_F, ∫σ_2 dμ_F) for the parallel flow ∂_t X = ν_F.

    Raises
    ------
    NotConvex
        If a sampled isotropic principal curvature is negative beyond noise.
    """
    fields = geometry(surface, norm) if fields is None else fields
    if not is_convex(fields):
        raise NotConvex("surface is not convex")
    return np.array([integrate(surface, fields, fields.sigma[..., k], "dmuF") for k in range(3)])


def homothety_Tp_coeff(surface: RadialSurface, norm: NormModel, p: float, fields=None) -> float:
    """∫ h_F^{1-p} dμ_F, the coefficient of (1+t)^{n-1} for the homothetic foliation.

    Raises
    ------
    NonPositiveSupport
        If h_F <= 0 at some node.
    """
    fields = geometry(surface, norm) if fields is None else fields
    if not np.all(fields.hF > 0):
        raise NonPositiveSupport("support function must be positive")
    return integrate(surface, fields, fields.hF ** (1.0 - p), "dmuF")
