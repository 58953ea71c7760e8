"""Independent oracles for the derived reference values used in the tests.

Nothing here imports the package.  Curvatures come from a symbolic
parametrization, integrals from scipy's adaptive cubature, the dual norm from
brute-force sampling.  Run once and commit the JSON it writes:

    python3 tests/oracles/build_frozen.py
"""

import json
import math
from pathlib import Path

import numpy as np
import sympy as sp
from scipy import integrate

OUT = Path(__file__).resolve().parent.parent / "frozen.json"


def ellipsoid_integrals(a, b, c):
    u, v = sp.symbols("u v", real=True)
    X = sp.Matrix([a * sp.sin(u) * sp.cos(v), b * sp.sin(u) * sp.sin(v), c * sp.cos(u)])
    Xu, Xv = X.diff(u), X.diff(v)
    n = Xu.cross(Xv)
    W = sp.sqrt(n.dot(n))
    E, F, G = Xu.dot(Xu), Xu.dot(Xv), Xv.dot(Xv)
    # h_ij = -<X_ij, nu> with outward nu, so the sphere has positive curvature
    L = -X.diff(u, 2).dot(n) / W
    M = -Xu.diff(v).dot(n) / W
    N = -X.diff(v, 2).dot(n) / W
    det = E * G - F ** 2
    H = (E * N - 2 * F * M + G * L) / det
    K = (L * N - M ** 2) / det
    fH = sp.lambdify((u, v), H, "math")
    fK = sp.lambdify((u, v), K, "math")
    fW = sp.lambdify((u, v), W, "math")
    hsupp = sp.lambdify((u, v), X.dot(n) / W, "math")

    def quad(fn):
        val, _ = integrate.dblquad(lambda vv, uu: fn(uu, vv) * fW(uu, vv), 0, math.pi,
                                   0, 2 * math.pi, epsabs=1e-13, epsrel=1e-13)
        return val

    out = {
        "area": quad(lambda uu, vv: 1.0),
        "int_H": quad(fH),
        "int_H2": quad(lambda uu, vv: fH(uu, vv) ** 2),
        "int_K": quad(fK),
        "int_inv_support": quad(lambda uu, vv: 1.0 / hsupp(uu, vv)),
        "volume": 4 * math.pi / 3 * a * b * c,
        # mean curvature (sum of principal curvatures) at the tip (a, 0, 0)
        "H_at_x_tip": float(H.subs({u: sp.pi / 2, v: 0})),
        "H_at_z_tip": float(sp.limit(H.subs(v, 0), u, 0)),
    }
    return out


def brute_force_dual(A, x, count=1_000_000, seed=1):
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((count, 3))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    F = np.sqrt(np.einsum("ij,jk,ik->i", xi, A, xi))
    return float(np.max(xi @ x / F))


def quartic_min_hessian_eig(a, count=20000, seed=2):
    # smallest eigenvalue of Hess(F^2/2) by central differences of F^2/2
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((count, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)

    def half_F2(x):
        s = np.linalg.norm(x, axis=-1)
        F = s * (1 + a * np.sum((x / s[..., None]) ** 4, axis=-1))
        return 0.5 * F * F

    h = 1e-4
    eye = np.eye(3)
    Hm = np.zeros((count, 3, 3))
    for i in range(3):
        for j in range(3):
            Hm[:, i, j] = (half_F2(d + h * eye[i] + h * eye[j]) - half_F2(d + h * eye[i] - h * eye[j])
                           - half_F2(d - h * eye[i] + h * eye[j]) + half_F2(d - h * eye[i] - h * eye[j])) / (4 * h * h)
    return float(np.linalg.eigvalsh(Hm)[:, 0].min())


def theta_riemann(E, p, panels=10_000_000):
    upper = (E - 1.0) ** ((3.0 - p) / (p - 1.0))
    a = (p - 1.0) / (3.0 - p)
    r = (np.arange(panels) + 0.5) * (upper / panels)
    return float(np.sum((1.0 + r ** a) ** -0.5) * (upper / panels))


def main():
    ell = ellipsoid_integrals(2.0, 1.0, 1.0)
    frozen = {
        "ellipsoid_211": ell,
        "dual_diag411_x": brute_force_dual(np.diag([4.0, 1.0, 1.0]), np.array([1.0, 0.0, 0.0])),
        "quartic10_min_eig": quartic_min_hessian_eig(10.0),
        "quartic01_min_eig": quartic_min_hessian_eig(0.1),
        "theta_p15_E2": theta_riemann(2.0, 1.5),
        "thm1_pq_sphere_p15_q2": (0.5 * 2 / 1.5) ** -0.5 * (8 * math.pi) ** 0.5 * (4 * math.pi) ** 0.5,
        # sphere of radius 1 centered at (0, 0, 1/2): h = 1 + cos(theta)/2
        "shifted_sphere_int_inv_support": integrate.quad(
            lambda t: 2 * math.pi * math.sin(t) / (1 + 0.5 * math.cos(t)), 0, math.pi,
            epsabs=1e-14, epsrel=1e-14)[0],
    }
    OUT.write_text(json.dumps(frozen, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(frozen, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
