"""Compiled per-node kernel for the flow right-hand side.

This is a node-by-node transcription of the vectorized formulas used by
:func:`anicap.surface.flow_kernel`; :func:`anicap.surface.geometry` computes
the same H_F along an independent path and the test suite compares the two.
"""

import math

import numpy as np
from numba import njit

EUCLIDEAN, ELLIPSOIDAL, QUARTIC = 0, 1, 2


@njit(cache=True, inline="always")
def _dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


@njit(cache=True, inline="always")
def _quartic_form(nu, u, v, un, vn, quart, a):
    # u^T D^2F(nu) v for F = |x|(1 + a sum (x_i/|x|)^4), unit nu
    uv = _dot(u, v)
    diag = 0.0
    uc = 0.0
    vc = 0.0
    for i in range(3):
        s = nu[i] * nu[i]
        diag += s * u[i] * v[i]
        uc += u[i] * s * nu[i]
        vc += v[i] * s * nu[i]
    extra = 12.0 * diag - 12.0 * (uc * vn + un * vc) + 15.0 * quart * un * vn - 3.0 * quart * uv
    return uv - un * vn + a * extra


@njit(cache=True)
def node_kernel(family, A, a, r, sin_theta, rt, rp, rtt, rpp, rtp, p, pt, pp, ptp, ppp):
    """Returns ``(HF, F_nu, grad_rho2, diff, ok)``; ``ok`` is False if det g <= 0 somewhere."""
    n = r.shape[0]
    HF = np.empty(n)
    Fn = np.empty(n)
    grad2 = np.empty(n)
    diff = np.empty(n)
    Xt = np.empty(3)
    Xp = np.empty(3)
    Xtt = np.empty(3)
    Xtp = np.empty(3)
    Xpp = np.empty(3)
    nu = np.empty(3)
    Anu = np.empty(3)
    AXt = np.empty(3)
    ok = True
    for k in range(n):
        a1, b1 = rt[k], rp[k]
        for i in range(3):
            Xt[i] = a1 * p[k, i] + pt[k, i]
            Xp[i] = b1 * p[k, i] + pp[k, i]
            Xtt[i] = (rtt[k] + a1 * a1 - 1.0) * p[k, i] + 2.0 * a1 * pt[k, i]
            Xtp[i] = (rtp[k] + a1 * b1) * p[k, i] + a1 * pp[k, i] + b1 * pt[k, i] + ptp[k, i]
            Xpp[i] = (rpp[k] + b1 * b1) * p[k, i] + 2.0 * b1 * pp[k, i] + ppp[k, i]
        g11 = Xt[0] * Xt[0] + Xt[1] * Xt[1] + Xt[2] * Xt[2]
        g12 = Xt[0] * Xp[0] + Xt[1] * Xp[1] + Xt[2] * Xp[2]
        g22 = Xp[0] * Xp[0] + Xp[1] * Xp[1] + Xp[2] * Xp[2]
        det = g11 * g22 - g12 * g12
        if not det > 0:
            ok = False
            det = 1.0
        nu[0] = Xt[1] * Xp[2] - Xt[2] * Xp[1]
        nu[1] = Xt[2] * Xp[0] - Xt[0] * Xp[2]
        nu[2] = Xt[0] * Xp[1] - Xt[1] * Xp[0]
        s = 1.0 / math.sqrt(nu[0] * nu[0] + nu[1] * nu[1] + nu[2] * nu[2])
        for i in range(3):
            nu[i] *= s
        h11 = -(Xtt[0] * nu[0] + Xtt[1] * nu[1] + Xtt[2] * nu[2])
        h12 = -(Xtp[0] * nu[0] + Xtp[1] * nu[1] + Xtp[2] * nu[2])
        h22 = -(Xpp[0] * nu[0] + Xpp[1] * nu[1] + Xpp[2] * nu[2])
        un = _dot(Xt, nu)
        vn = _dot(Xp, nu)
        if family == EUCLIDEAN:
            F = 1.0
            b11 = _dot(Xt, Xt) - un * un
            b12 = _dot(Xt, Xp) - un * vn
            b22 = _dot(Xp, Xp) - vn * vn
        elif family == ELLIPSOIDAL:
            for i in range(3):
                Anu[i] = A[i, 0] * nu[0] + A[i, 1] * nu[1] + A[i, 2] * nu[2]
                AXt[i] = A[i, 0] * Xt[0] + A[i, 1] * Xt[1] + A[i, 2] * Xt[2]
            F = math.sqrt(_dot(nu, Anu))
            iF = 1.0 / F
            gu = _dot(Anu, Xt) * iF
            gv = _dot(Anu, Xp) * iF
            b11 = (_dot(AXt, Xt) - gu * gu) * iF
            b12 = (_dot(AXt, Xp) - gu * gv) * iF
            AXp0 = A[0, 0] * Xp[0] + A[0, 1] * Xp[1] + A[0, 2] * Xp[2]
            AXp1 = A[1, 0] * Xp[0] + A[1, 1] * Xp[1] + A[1, 2] * Xp[2]
            AXp2 = A[2, 0] * Xp[0] + A[2, 1] * Xp[1] + A[2, 2] * Xp[2]
            b22 = (AXp0 * Xp[0] + AXp1 * Xp[1] + AXp2 * Xp[2] - gv * gv) * iF
        else:
            quart = nu[0] ** 4 + nu[1] ** 4 + nu[2] ** 4
            F = 1.0 + a * quart
            b11 = _quartic_form(nu, Xt, Xt, un, un, quart, a)
            b12 = _quartic_form(nu, Xt, Xp, un, vn, quart, a)
            b22 = _quartic_form(nu, Xp, Xp, vn, vn, quart, a)
        idet = 1.0 / det
        i11, i12, i22 = g22 * idet, -g12 * idet, g11 * idet
        m11 = i11 * b11 + i12 * b12
        m12 = i11 * b12 + i12 * b22
        m21 = i12 * b11 + i22 * b12
        m22 = i12 * b12 + i22 * b22
        n11 = i11 * h11 + i12 * h12
        n12 = i11 * h12 + i12 * h22
        n21 = i12 * h11 + i22 * h12
        n22 = i12 * h12 + i22 * h22
        H = (m11 * n11 + m12 * n21 + m21 * n12 + m22 * n22) / r[k]
        half = 0.5 * (m11 + m22)
        lam = half + math.sqrt(max(half * half - (m11 * m22 - m12 * m21), 0.0))
        st = b1 / sin_theta[k]
        gr = a1 * a1 + st * st
        HF[k] = H
        Fn[k] = F
        grad2[k] = gr
        rh = r[k] * H
        diff[k] = 2.0 * F * lam * (1.0 + gr) / (rh * rh) if rh != 0.0 else np.inf
    return HF, Fn, grad2, diff, ok
