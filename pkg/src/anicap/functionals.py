"""Hawking mass, Willmore energy and the capacity bounds.

Every surface functional accepts an optional precomputed ``fields`` argument
(the :class:`~anicap.surface.GeometryFields` of the same surface) so that a
report evaluates the geometry once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sp_integrate

from .errors import (DegenerateDenominator, HypothesisViolation, InvalidExponent,
                     NonPositiveSupport, NonPositiveUpperLimit, NotConvex, PositiveHawkingMass)
from .norm import NormModel
from .surface import (RadialSpec, RadialSurface, enclosed_volume, geometry, integrate, is_convex,
                      wulff_boundary_area)

HAWKING_BAND = 1e-6
SLACK = 5e-3


def _fields(surface, norm, fields):
    return geometry(surface, norm) if fields is None else fields


def _wulff_area(norm, surface=None):
    grid = None if surface is None else surface.grid
    return wulff_boundary_area(norm, grid if norm.dimension == 3 else None)


def _check_p(p, lo, hi, lo_open=True, hi_open=True):
    ok_lo = p > lo if lo_open else p >= lo
    ok_hi = p < hi if hi_open else p <= hi
    if not (ok_lo and ok_hi):
        lb, rb = "(" if lo_open else "[", ")" if hi_open else "]"
        raise InvalidExponent(f"exponent {p} outside {lb}{lo:g}, {hi:g}{rb}")


def _mean_convex(fields):
    if not np.all(fields.HF > 0):
        raise HypothesisViolation(f"surface is not F-mean convex (min H_F = {fields.HF.min():.3e})")


def _capacity_constant(p, n):
    return ((n - p) / (p - 1.0)) ** (p - 1.0)


def willmore_energy(surface: RadialSurface, norm: NormModel, fields=None) -> float:
    """∫ H_F^2 dμ_F."""
    f = _fields(surface, norm, fields)
    return integrate(surface, f, f.HF ** 2, "dmuF")


def willmore_ratio(surface, norm, fields=None) -> float:
    """E = ∫ H_F^2 dμ_F / (4 |∂W|_F); equal to 1 exactly on Wulff shapes."""
    return willmore_energy(surface, norm, fields) / (4.0 * _wulff_area(norm, surface))


def hawking_mass(surface: RadialSurface, norm: NormModel, fields=None) -> float:
    """Anisotropic Hawking mass sqrt(|Σ|_F / 4|∂W|_F) (1 - E)."""
    f = _fields(surface, norm, fields)
    area = integrate(surface, f, 1.0, "dmuF")
    w = _wulff_area(norm, surface)
    return math.sqrt(area / (4.0 * w)) * (1.0 - willmore_energy(surface, norm, f) / (4.0 * w))


def thm1_bound(surface: RadialSurface, norm: NormModel, p: float, fields=None) -> float:
    """((p-1)(n-1)/(n-p))^{1-p} ∫ H_F^{p-1} dμ_F, for 2 <= p < n.

    Raises
    ------
    InvalidExponent, HypothesisViolation
    """
    n = 3
    _check_p(p, 2.0, n, lo_open=False)
    f = _fields(surface, norm, fields)
    _mean_convex(f)
    c = ((p - 1.0) * (n - 1.0) / (n - p)) ** (1.0 - p)
    return c * integrate(surface, f, f.HF ** (p - 1.0), "dmuF")


def thm1_bound_pq(surface: RadialSurface, norm: NormModel, p: float, q: float, fields=None) -> float:
    """Interpolated form for 1 < p <= 2 <= q < n.

    ``((p-1)(n-1)/(n-p))^{1-p} (∫H_F^{q-1})^{(p-1)/(q-1)} |Σ|_F^{(q-p)/(q-1)}``.
    At p = q this is :func:`thm1_bound` exactly.
    """
    n = 3
    if p == q:
        return thm1_bound(surface, norm, p, fields)
    _check_p(p, 1.0, 2.0, hi_open=False)
    _check_p(q, 2.0, n, lo_open=False)
    f = _fields(surface, norm, fields)
    _mean_convex(f)
    c = ((p - 1.0) * (n - 1.0) / (n - p)) ** (1.0 - p)
    Tq = integrate(surface, f, f.HF ** (q - 1.0), "dmuF")
    area = integrate(surface, f, 1.0, "dmuF")
    return c * Tq ** ((p - 1.0) / (q - 1.0)) * area ** ((q - p) / (q - 1.0))


def theta_integral(E: float, p: float) -> float:
    """∫_0^U (1 + r^{(p-1)/(3-p)})^{-1/2} dr with U = (E-1)^{(3-p)/(p-1)}.

    Raises
    ------
    InvalidExponent
        Unless 1 < p < 3.
    NonPositiveUpperLimit
        If E <= 1.
    """
    _check_p(p, 1.0, 3.0)
    if not E > 1.0:
        raise NonPositiveUpperLimit(f"E = {E} must exceed 1")
    upper = (E - 1.0) ** ((3.0 - p) / (p - 1.0))
    a = (p - 1.0) / (3.0 - p)
    val, _ = sp_integrate.quad(lambda r: (1.0 + r ** a) ** -0.5, 0.0, upper,
                               epsabs=1e-10, epsrel=1e-13, limit=200)
    return val


def thm2_bound(surface: RadialSurface, norm: NormModel, p: float, fields=None) -> float:
    """Hawking-mass bound; dispatches on the sign of m_H^F.

    Inside the band |m| <= 1e-6 sqrt(|Σ|_F) the Wulff value with
    r0 = sqrt(|Σ|_F / |∂W|_F) is returned; for negative mass the θ form.

    Raises
    ------
    InvalidExponent, HypothesisViolation, PositiveHawkingMass
    """
    _check_p(p, 1.0, 3.0)
    f = _fields(surface, norm, fields)
    _mean_convex(f)
    area = integrate(surface, f, 1.0, "dmuF")
    w = _wulff_area(norm, surface)
    m = hawking_mass(surface, norm, f)
    c = _capacity_constant(p, 3)
    band = HAWKING_BAND * math.sqrt(area)
    if abs(m) <= band:
        return c * w * math.sqrt(area / w) ** (3.0 - p)
    if m > band:
        raise PositiveHawkingMass(f"m_H = {m:.3e} above the zero band")
    return thm2_theta_form(area, w, willmore_energy(surface, norm, f) / (4.0 * w), p)


def thm2_theta_form(area_F: float, wulff_area: float, E: float, p: float) -> float:
    """Negative-mass branch of :func:`thm2_bound` from its scalar inputs.

    ``c |∂W|_F^{(p-1)/2} |Σ|_F^{(3-p)/2} (E-1)^{3-p} θ^{1-p}`` with
    c = ((3-p)/(p-1))^{p-1}; tends to the zero-mass value as E -> 1+.
    """
    theta = theta_integral(E, p)
    return (_capacity_constant(p, 3) * wulff_area ** ((p - 1.0) / 2.0) * area_F ** ((3.0 - p) / 2.0)
            * (E - 1.0) ** (3.0 - p) * theta ** (1.0 - p))


def corollary_capf_bound(surface: RadialSurface, norm: NormModel, fields=None) -> float:
    """(1/2) sqrt(|∂W|_F |Σ|_F) (1 + sqrt(E)), the p = 2 case in closed form."""
    f = _fields(surface, norm, fields)
    _mean_convex(f)
    area = integrate(surface, f, 1.0, "dmuF")
    w = _wulff_area(norm, surface)
    E = willmore_energy(surface, norm, f) / (4.0 * w)
    return 0.5 * math.sqrt(w * area) * (1.0 + math.sqrt(E))


def _poly_quadrature(coeffs, p):
    # ∫_0^∞ (c0 + c1 t + c2 t^2)^{1/(1-p)} dt: geometric panels up to T*, then the
    # leading-term tail once c2 t^2 dominates the rest by 1e6
    c0, c1, c2 = (float(c) for c in coeffs)
    e = 1.0 / (1.0 - p)
    # c2 t^2 >= 1e6 (c0 + c1 t)
    t_star = (1e6 * c1 + math.sqrt((1e6 * c1) ** 2 + 4e6 * c2 * c0)) / (2.0 * c2)
    g = lambda t: (c0 + t * (c1 + c2 * t)) ** e
    edges = [0.0]
    tau = math.sqrt(c0 / c2)
    while edges[-1] < t_star:
        edges.append(min(t_star, tau * 10.0 ** (len(edges) - 1)))
    parts = [sp_integrate.quad(g, a, b, epsabs=0.0, epsrel=1e-12, limit=200)[0]
             for a, b in zip(edges[:-1], edges[1:])]
    k = 2.0 * e + 1.0  # < 0 for p < 3
    tail = c2 ** e * t_star ** k / -k
    return math.fsum(parts) + tail


def thm3_convex_bound(surface: RadialSurface, norm: NormModel, p: float, fields=None) -> float:
    """(∫_0^∞ (Σ_i ∫σ_i dμ_F t^i)^{1/(1-p)} dt)^{1-p} by quadrature.

    Raises
    ------
    NotConvex, InvalidExponent
    """
    from .flow import normal_flow_Tp_coeffs

    _check_p(p, 1.0, 3.0)
    coeffs = normal_flow_Tp_coeffs(surface, norm, _fields(surface, norm, fields))
    return _poly_quadrature(coeffs, p) ** (1.0 - p)


def thm3_convex_closed_form(coeffs) -> float:
    """p = 2 value c1 ε / log((1+ε)/(1-ε)), ε = sqrt(1 - 4 c0 c2 / c1^2).

    Uses 1/2 - ε^2/6 below ε = 1e-4.
    """
    c0, c1, c2 = (float(c) for c in coeffs)
    eps = math.sqrt(max(0.0, 1.0 - 4.0 * c0 * c2 / (c1 * c1)))
    if eps < 1e-4:
        return c1 * (0.5 - eps * eps / 6.0)
    return c1 * eps / math.log((1.0 + eps) / (1.0 - eps))


def thm3_star_bound(surface: RadialSurface, norm: NormModel, p: float, fields=None) -> float:
    """((n-p)/(p-1))^{p-1} ∫ h_F^{1-p} dμ_F.

    Raises
    ------
    NonPositiveSupport, InvalidExponent
    """
    from .flow import homothety_Tp_coeff

    _check_p(p, 1.0, 3.0)
    return _capacity_constant(p, 3) * homothety_Tp_coeff(surface, norm, p, _fields(surface, norm, fields))


def thm4_cap_lower(area_F: float, volume: float, norm: NormModel, p: float, n: int = 3,
                   wulff_area: float | None = None) -> float:
    """Capacity lower bound (B / (A - |K|))^{p-1}.

    A = p(n-1)/(n(n-p)) |∂K|_F^{n/(n-1)} |∂W|_F^{1/(1-n)}, B = |∂K|_F^{p/(p-1)}.

    Raises
    ------
    DegenerateDenominator
        If A <= |K|.
    """
    _check_p(p, 1.0, n)
    w = _wulff_area(norm) if wulff_area is None else wulff_area
    A = p * (n - 1.0) / (n * (n - p)) * area_F ** (n / (n - 1.0)) * w ** (1.0 / (1.0 - n))
    if not A > volume:
        raise DegenerateDenominator(f"A = {A:.6g} does not exceed |K| = {volume:.6g}")
    B = area_F ** (p / (p - 1.0))
    return (B / (A - volume)) ** (p - 1.0)


def isocapacitary_lower(volume: float, norm: NormModel, p: float, n: int = 3,
                        wulff_area: float | None = None) -> float:
    """n |W|^{p/n} ((n-p)/(p-1))^{p-1} |K|^{(n-p)/n}."""
    _check_p(p, 1.0, n)
    w = _wulff_area(norm) if wulff_area is None else wulff_area
    return n * (w / n) ** (p / n) * _capacity_constant(p, n) * volume ** ((n - p) / n)


def isoperimetric_defect(surface: RadialSurface, norm: NormModel, fields=None) -> float:
    """|∂K|_F - n |W|^{1/n} |K|^{(n-1)/n} (n = 3)."""
    f = _fields(surface, norm, fields)
    area = integrate(surface, f, 1.0, "dmuF")
    vol = enclosed_volume(surface)
    w = _wulff_area(norm, surface)
    return area - 3.0 * (w / 3.0) ** (1.0 / 3.0) * vol ** (2.0 / 3.0)


def wulff_capacity_exact(norm: NormModel, p: float, r0: float = 1.0, n: int | None = None,
                         wulff_area: float | None = None) -> float:
    """((n-p)/(p-1))^{p-1} |∂W|_F r0^{n-p}, the capacity of r0 W."""
    n = norm.dimension if n is None else n
    _check_p(p, 1.0, n)
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    w = _wulff_area(norm) if wulff_area is None else wulff_area
    return _capacity_constant(p, n) * w * r0 ** (n - p)


# -- report ------------------------------------------------------------------

UPPER = ("thm1", "thm1_pq", "thm2", "cor15", "thm3_convex", "thm3_star")
LOWER = ("thm4", "isocapacitary")


@dataclass
class BoundsReport:
    """All bounds for one body and exponent.

    ``upper`` and ``lower`` map bound names to values (None when not
    evaluated); ``notes`` records why an entry is missing or flagged.
    """

    p: float
    q: float | None
    body: dict
    hawking: float
    willmore: float
    upper: dict
    lower: dict
    oracle: float | None
    flags: dict
    notes: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        return {"p": self.p, "q": self.q, "body": self.body, "hawking": self.hawking,
                "willmore": self.willmore, "upper": self.upper, "lower": self.lower,
                "oracle": self.oracle, "flags": self.flags, "notes": self.notes,
                "extra": self.extra}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    @property
    def passed(self) -> bool:
        return bool(self.flags.get("sandwich", True))

    def table(self) -> str:
        rows = [("bound", "kind", "value", "note")]
        for kind, d in (("upper", self.upper), ("lower", self.lower)):
            for k in sorted(d):
                v = d[k]
                rows.append((k, kind, "-" if v is None else f"{v:.10g}", self.notes.get(k, "")))
        if self.oracle is not None:
            rows.append(("wulff_exact", "oracle", f"{self.oracle:.10g}", ""))
        rows.append(("hawking", "value", f"{self.hawking:.6e}", ""))
        rows.append(("willmore", "value", f"{self.willmore:.10g}", ""))
        width = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, width)).rstrip() for r in rows]
        lines.append("flags: " + ", ".join(f"{k}={'pass' if v else 'FAIL'}"
                                           for k, v in sorted(self.flags.items())))
        return "\n".join(lines)


def _try(fn, notes, key):
    try:
        return fn()
    except (HypothesisViolation, NotConvex, NonPositiveSupport, DegenerateDenominator,
            PositiveHawkingMass, InvalidExponent) as exc:
        notes[key] = f"hypothesis violated: {type(exc).__name__}: {exc}"
        return None


def wulff_scale(body: RadialSpec | None, norm: NormModel) -> float | None:
    """r0 when ``body`` is an origin-centered scaled Wulff shape, else None."""
    if body is None:
        return None
    if body.kind == "wulff":
        return body.r0
    if body.kind == "perturbed_wulff" and body.epsilon == 0:
        return body.r0
    if body.kind == "constant" and norm.family == "euclidean":
        return body.radius
    return None


def bounds_report(surface: RadialSurface, norm: NormModel, p: float, q: float | None = None,
                  body: RadialSpec | None = None, fields=None) -> BoundsReport:
    """Evaluate every bound for one body and assemble pass/fail flags.

    Hypothesis failures are recorded in ``notes`` rather than raised.  The
    sandwich flag compares lower bounds against upper bounds whose hypotheses
    hold (0.5% slack); the convex-only lower bound enters only for convex
    bodies.
    """
    f = _fields(surface, norm, fields)
    notes: dict = {}
    w = _wulff_area(norm, surface)
    area = integrate(surface, f, 1.0, "dmuF")
    vol = enclosed_volume(surface)
    convex = is_convex(f)
    if q is None and p <= 2.0:
        q = 2.0
    upper = {
        "thm1": _try(lambda: thm1_bound(surface, norm, p, f), notes, "thm1"),
        "thm1_pq": (_try(lambda: thm1_bound_pq(surface, norm, p, q, f), notes, "thm1_pq")
                    if q is not None else None),
        "thm2": _try(lambda: thm2_bound(surface, norm, p, f), notes, "thm2"),
        "cor15": (_try(lambda: corollary_capf_bound(surface, norm, f), notes, "cor15")
                  if p == 2.0 else None),
        "thm3_convex": _try(lambda: thm3_convex_bound(surface, norm, p, f), notes, "thm3_convex"),
        "thm3_star": _try(lambda: thm3_star_bound(surface, norm, p, f), notes, "thm3_star"),
    }
    if q is None:
        notes["thm1_pq"] = "not applicable: needs p <= 2 <= q"
    if p != 2.0:
        notes["cor15"] = "not applicable: p = 2 only"
    lower = {
        "thm4": _try(lambda: thm4_cap_lower(area, vol, norm, p, 3, w), notes, "thm4"),
        "isocapacitary": isocapacitary_lower(vol, norm, p, 3, w),
    }
    if not convex and lower["thm4"] is not None:
        notes["thm4"] = "hypothesis violated: body not convex (value reported, not used in sandwich)"
    hawking = hawking_mass(surface, norm, f)
    will = willmore_energy(surface, norm, f)
    extra = {"area_F": area, "volume": vol, "convex": convex,
             "isoperimetric_defect": isoperimetric_defect(surface, norm, f)}
    if p == 2.0 and upper["thm3_convex"] is not None:
        from .flow import normal_flow_Tp_coeffs
        extra["thm3_convex_closed_form"] = thm3_convex_closed_form(normal_flow_Tp_coeffs(surface, norm, f))

    r0 = wulff_scale(body, norm)
    oracle = wulff_capacity_exact(norm, p, r0, 3, w) if r0 is not None else None

    ups = [v for v in upper.values() if v is not None]
    lows = [lower["isocapacitary"]] + ([lower["thm4"]] if convex and lower["thm4"] is not None else [])
    flags = {
        "sandwich": bool(max(lows) <= min(ups) * (1 + SLACK)) if ups else True,
        "hawking_nonpositive": bool(hawking <= HAWKING_BAND * math.sqrt(area)),
        "willmore": bool(will >= 4.0 * w * (1 - SLACK)),
        "isoperimetric": bool(extra["isoperimetric_defect"] >= -SLACK * area),
    }
    if oracle is not None:
        vals = ups + [v for v in lower.values() if v is not None]
        flags["oracle"] = bool(all(abs(v / oracle - 1.0) <= SLACK for v in vals))
    body_d = {"area_F": area, "volume": vol, "wulff_area": w, "wulff_volume": w / 3.0}
    if body is not None:
        body_d["spec"] = {k: getattr(body, k) for k in body.__dataclass_fields__}
    return BoundsReport(p=float(p), q=None if q is None else float(q), body=body_d,
                        hawking=hawking, willmore=will, upper=upper, lower=lower,
                        oracle=oracle, flags=flags, notes=notes, extra=extra)
