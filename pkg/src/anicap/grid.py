"""Latitude-longitude discretization of the unit sphere.

Colatitudes are Gauss-Legendre nodes (in cos theta), longitudes uniform.  The
quadrature weight of a node is its Gauss-Legendre weight times 2 pi / n_phi.
Tangential derivatives use five-point stencils: centered and periodic in
longitude, centered in colatitude with rows beyond a pole taken from the
antipodal meridian (theta -> -theta, phi -> phi + pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import InvalidGrid


def fd_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Fornberg finite-difference weights.

    Returns ``c`` of shape ``(m + 1, len(x))`` where ``c[k] @ f(x)``
    approximates the k-th derivative of f at ``z``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((m + 1, n))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Structured grid on S^2; node arrays have shape ``(n_theta, n_phi)``."""

    n_theta: int
    n_phi: int
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    quad_weights: np.ndarray = field(repr=False)
    # colatitude stencils: source rows, antipodal flags, weights for d/dtheta and d2/dtheta2
    theta_rows: np.ndarray = field(repr=False)
    theta_flip: np.ndarray = field(repr=False)
    theta_w1: np.ndarray = field(repr=False)
    theta_w2: np.ndarray = field(repr=False)
    phi_w: np.ndarray = field(repr=False)
    order: int = 4

    @property
    def shape(self):
        return (self.n_theta, self.n_phi)

    @property
    def size(self):
        return self.n_theta * self.n_phi

    @property
    def h(self) -> float:
        """Equatorial node spacing (radians)."""
        return max(math.pi / self.n_theta, 2 * math.pi / self.n_phi)

    @cached_property
    def frame(self):
        """Exact derivatives of p(theta, phi) at the nodes."""
        st, ct = np.sin(self.theta)[:, None], np.cos(self.theta)[:, None]
        sp, cp = np.sin(self.phi)[None, :], np.cos(self.phi)[None, :]
        z = np.zeros((self.n_theta, self.n_phi))
        stack = lambda a, b, c: np.stack(np.broadcast_arrays(a, b, c), axis=-1)
        return {
            "p": self.nodes,
            "p_t": stack(ct * cp, ct * sp, -st + z),
            "p_p": stack(-st * sp, st * cp, z),
            "p_tp": stack(-ct * sp, ct * cp, z),
            "p_pp": stack(-st * cp, -st * sp, z),
        }

    @cached_property
    def frame_flat(self):
        """``frame`` arrays ``(p, p_t, p_p, p_tp, p_pp)`` reshaped to (size, 3)."""
        return tuple(np.ascontiguousarray(self.frame[k].reshape(-1, 3))
                     for k in ("p", "p_t", "p_p", "p_tp", "p_pp"))

    @cached_property
    def sin_flat(self):
        return np.repeat(np.sin(self.theta), self.n_phi)

    @property
    def sin_theta(self):
        return np.sin(self.theta)[:, None]

    def integrate_sphere(self, f) -> float:
        """Quadrature of a node field against the round measure."""
        return math.fsum(np.ravel(np.broadcast_to(f, self.shape) * self.quad_weights))

    def _theta_matrix(self, deriv, parity):
        key = (deriv, parity)
        cache = self.__dict__.setdefault("_theta_ops", {})
        if key not in cache:
            nt, nph = self.shape
            w = self.theta_w1 if deriv == 1 else self.theta_w2
            k = np.arange(nph)
            rows, cols, vals = [], [], []
            for j in range(nt):
                for m in range(w.shape[1]):
                    flip = self.theta_flip[j, m]
                    src = self.theta_rows[j, m]
                    kk = (k + nph // 2) % nph if flip else k
                    rows.append(j * nph + k)
                    cols.append(src * nph + kk)
                    vals.append(np.full(nph, w[j, m] * (parity if flip else 1.0)))
            n = nt * nph
            cache[key] = sparse.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
        return cache[key]

    def _theta_apply(self, f, deriv, parity):
        f = np.asarray(f, dtype=float)
        flat = f.reshape(self.size, -1)
        return (self._theta_matrix(deriv, parity) @ flat).reshape(f.shape)

    def d_theta(self, f, parity: int = 1):
        """d/dtheta of a node field (extra trailing axes allowed).

        ``parity`` is +1 for fields that are smooth scalars on the sphere and
        -1 for fields that change sign across the pole (such as d f/d theta).
        Rows beyond a pole are read from the antipodal meridian.
        """
        return self._theta_apply(f, 1, parity)

    def d_theta2(self, f, parity: int = 1):
        return self._theta_apply(f, 2, parity)

    def d_phi(self, f):
        return self._phi_apply(np.asarray(f, dtype=float), self.phi_w[1])

    def d_phi2(self, f):
        return self._phi_apply(np.asarray(f, dtype=float), self.phi_w[2])

    def _phi_apply(self, f, w):
        half = len(w) // 2
        out = w[half] * f
        for k in range(1, half + 1):
            out = out + w[half + k] * np.roll(f, -k, axis=1) + w[half - k] * np.roll(f, k, axis=1)
        return out

    def polar_filter(self, f):
        """Damp longitudinal modes a ring cannot resolve at equatorial spacing.

        Ring j keeps Fourier modes m <= max(1, n_phi/2 * sin(theta_j)), so the
        effective longitudinal resolution never exceeds the equatorial one.
        """
        spec = np.fft.rfft(f, axis=1)
        spec = spec * self._filter_mask[(...,) + (None,) * (spec.ndim - 2)]
        return np.fft.irfft(spec, n=self.n_phi, axis=1)

    @property
    def _filter_mask(self):
        m = np.arange(self.n_phi // 2 + 1)
        cut = np.maximum(1.0, 0.5 * self.n_phi * np.sin(self.theta))
        return (m[None, :] <= cut[:, None]).astype(float)


def make_grid(n_theta: int, n_phi: int, order: int = 8) -> SphereGrid:
    """Build a Gauss-Legendre x uniform-longitude grid.

    Raises
    ------
    InvalidGrid
        If ``n_theta < 16``, ``n_phi < 32`` or ``n_phi`` is odd.
    """
    if int(n_theta) != n_theta or int(n_phi) != n_phi:
        raise InvalidGrid("grid sizes must be integers")
    n_theta, n_phi = int(n_theta), int(n_phi)
    if n_theta < 16 or n_phi < 32 or n_phi % 2:
        raise InvalidGrid(f"invalid grid {n_theta}x{n_phi}: need n_theta>=16, even n_phi>=32")
    x, w = np.polynomial.legendre.leggauss(n_theta)
    perm = np.argsort(-x)
    x, w = x[perm], w[perm]
    theta = np.arccos(x)
    phi = 2 * math.pi * np.arange(n_phi) / n_phi
    st = np.sin(theta)[:, None]
    nodes = np.stack([st * np.cos(phi)[None, :], st * np.sin(phi)[None, :],
                      np.broadcast_to(x[:, None], (n_theta, n_phi))], axis=-1)
    quad = w[:, None] * np.full((1, n_phi), 2 * math.pi / n_phi)

    # extended colatitude coordinate: rows past either pole are reflections
    if order not in (4, 6, 8):
        raise InvalidGrid("stencil order must be 4, 6 or 8")
    half = order // 2
    width = 2 * half + 1
    rows = np.empty((n_theta, width), dtype=int)
    flip = np.zeros((n_theta, width), dtype=bool)
    w1 = np.empty((n_theta, width))
    w2 = np.empty((n_theta, width))
    for j in range(n_theta):
        coords = []
        for k, jj in enumerate(range(j - half, j + half + 1)):
            if jj < 0:
                src, fl, t = -jj - 1, True, -theta[-jj - 1]
            elif jj >= n_theta:
                src = 2 * n_theta - 1 - jj
                fl, t = True, 2 * math.pi - theta[src]
            else:
                src, fl, t = jj, False, theta[jj]
            rows[j, k], flip[j, k] = src, fl
            coords.append(t)
        c = fd_weights(theta[j], np.array(coords), 2)
        w1[j], w2[j] = c[1], c[2]
    hp = 2 * math.pi / n_phi
    phi_w = fd_weights(0.0, hp * np.arange(-half, half + 1), 2)
    return SphereGrid(n_theta, n_phi, theta, phi, nodes, quad, rows, flip, w1, w2, phi_w, order)
