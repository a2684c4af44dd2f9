"""Tensor-product Daubechies bases on the torus and on a centered ball.

Index convention (j, l, w): level j >= 0; type l in 1..2^D with the digits of
l selecting scaling (0) / wavelet (1) per axis for l < 2^D, and l = 2^D the
pure-scaling layer, which on the torus exists only as the constant function
at (j, z) = (0, 0) and on R^D only at j = 0 (integer-translate scaling
tensors).  Translations: z in {0..2^j-1}^D (torus, reduced mod 2^j) or
w in Z^D restricted to the level window (ball).

Periodised factors fold every integer translate that meets [0, 1); when
2^j > N this reduces to the familiar two-/three-translate wrap-around sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dyadic import DyadicTable, cascade_table, wavelet_table
from .filters import FilterBank, daubechies_filter

__all__ = ["WaveletIndex", "BasisSpec", "torus_spec", "ball_spec"]


@dataclass(frozen=True)
class WaveletIndex:
    j: int
    l: int
    w: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(int(v) for v in self.w))


def _digits(l: int, dim: int) -> tuple[int, ...]:
    return tuple((l >> i) & 1 for i in range(dim))


@dataclass(frozen=True)
class BasisSpec:
    """Evaluation context: dimension, domain, filter and tables."""

    dim: int
    domain: str  # "torus" | "ball"
    radius: float  # ball radius K (ignored for torus)
    filter: FilterBank
    phi: DyadicTable
    psi: DyadicTable

    def __post_init__(self):
        if self.domain not in ("torus", "ball"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.domain == "ball" and self.radius <= 1.0:
            raise ValueError("ball domain requires radius K > 1")

    @property
    def nv(self) -> int:
        return self.filter.vanishing_moments

    @property
    def support_len(self) -> int:
        return self.filter.support_length

    @property
    def max_derivative(self) -> int:
        return self.phi.max_derivative

    @cached_property
    def genuine_types(self) -> tuple[int, ...]:
        return tuple(range(1, 2**self.dim))

    @property
    def scaling_type(self) -> int:
        return 2**self.dim

    def translate_window(self, j: int) -> tuple[int, int]:
        """Inclusive w range per axis at level j (ball domain)."""
        m = int(np.ceil(self.radius * 2**j)) + self.support_len
        return (-m, m)

    def window_size(self, j: int) -> int:
        lo, hi = self.translate_window(j)
        return hi - lo + 1

    def domain_margin(self, j: int) -> float:
        """Points with |x_i| <= K + margin only touch in-window translates."""
        return self.support_len * 2.0 ** (-j)

    # ------------------------------------------------------------ 1-d factors

    def _factor_range(self, kind: int) -> tuple[float, int]:
        """(support_min, support_len) of the 1-d factor (0 = phi, 1 = psi)."""
        t = self.phi if kind == 0 else self.psi
        return (t.support_min, t.support_len)

    def _axis_offsets_values(self, y: np.ndarray, kind: int, deriv: int):
        """For arguments y (already scaled by 2^j), return integer offsets
        t[n, N+1] and factor values f(y - t) with f = phi or psi."""
        table = self.phi if kind == 0 else self.psi
        a = table.support_min
        n = table.support_len
        t0 = np.floor(y - a).astype(np.int64) - n + 1
        offs = t0[:, None] + np.arange(n + 1)[None, :]
        vals = table.evaluate(y[:, None] - offs, deriv)
        return offs, vals

    def axis_factor_torus(self, j: int, u: np.ndarray, kind: int, deriv: int = 0) -> np.ndarray:
        """Dense folded factor values F[n, 2^j]:
        F[n, z] = 2^(j/2) * (2^j)^deriv * sum_{t == z mod 2^j} f^(deriv)(2^j u_n - t)."""
        m = 2**j
        y = np.ldexp(np.mod(u, 1.0), j)
        offs, vals = self._axis_offsets_values(y, kind, deriv)
        out = np.zeros((u.size, m))
        z = np.mod(offs, m)
        np.add.at(out, (np.repeat(np.arange(u.size), offs.shape[1]), z.ravel()), vals.ravel())
        return out * (2.0 ** (j / 2.0 + j * deriv))

    # ------------------------------------------------------------ public API

    def eval_basis(self, idx: WaveletIndex, point) -> float:
        pts = np.atleast_2d(np.asarray(point, dtype=float))
        return float(self.eval_basis_many(idx, pts)[0])

    def eval_basis_many(self, idx: WaveletIndex, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        j, l, w = idx.j, idx.l, idx.w
        if l == self.scaling_type:
            if self.domain == "torus":
                return (
                    np.ones(points.shape[0])
                    if (j == 0 and all(v == 0 for v in w))
                    else np.zeros(points.shape[0])
                )
            if j != 0:
                return np.zeros(points.shape[0])
            out = np.ones(points.shape[0])
            for i in range(self.dim):
                out *= self.phi.evaluate(points[:, i] - w[i], 0)
            return out
        digits = _digits(l, self.dim)
        if self.domain == "torus":
            out = np.ones(points.shape[0])
            m = 2**j
            for i in range(self.dim):
                fac = self.axis_factor_torus(j, points[:, i], digits[i])
                out *= fac[:, w[i] % m]
            return out
        out = np.full(points.shape[0], 2.0 ** (j * self.dim / 2.0))
        for i in range(self.dim):
            table = self.phi if digits[i] == 0 else self.psi
            out *= table.evaluate(np.ldexp(points[:, i], j) - w[i], 0)
        return out

    def eval_basis_gradient(self, idx: WaveletIndex, point) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(point, dtype=float))
        return self.eval_basis_gradient_many(idx, pts)[0]

    def eval_basis_gradient_many(self, idx: WaveletIndex, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        npts = points.shape[0]
        j, l, w = idx.j, idx.l, idx.w
        if l == self.scaling_type:
            if self.domain == "torus":
                return np.zeros((npts, self.dim))
            if j != 0:
                return np.zeros((npts, self.dim))
            facs = [self.phi.evaluate(points[:, i] - w[i], 0) for i in range(self.dim)]
            ders = [self.phi.evaluate(points[:, i] - w[i], 1) for i in range(self.dim)]
            grad = np.empty((npts, self.dim))
            for axis in range(self.dim):
                g = ders[axis].copy()
                for i in range(self.dim):
                    if i != axis:
                        g *= facs[i]
                grad[:, axis] = g
            return grad
        digits = _digits(l, self.dim)
        if self.domain == "torus":
            m = 2**j
            facs, ders = [], []
            for i in range(self.dim):
                facs.append(self.axis_factor_torus(j, points[:, i], digits[i], 0)[:, w[i] % m])
                ders.append(self.axis_factor_torus(j, points[:, i], digits[i], 1)[:, w[i] % m])
        else:
            scale = 2.0 ** (j * self.dim / 2.0)
            facs, ders = [], []
            for i in range(self.dim):
                table = self.phi if digits[i] == 0 else self.psi
                y = np.ldexp(points[:, i], j) - w[i]
                facs.append(table.evaluate(y, 0))
                ders.append(table.evaluate(y, 1) * 2.0**j)
            facs[0] = facs[0] * scale
            ders[0] = ders[0] * scale
        grad = np.empty((npts, self.dim))
        for axis in range(self.dim):
            g = ders[axis].copy()
            for i in range(self.dim):
                if i != axis:
                    g *= facs[i]
            grad[:, axis] = g
        return grad

    def active_indices(self, point, j: int) -> list[tuple[int, tuple[int, ...]]]:
        """All (l, w) at level j whose support box contains the point.

        Support of the 1-d factor along axis i is [2^-j (w_i - N), 2^-j (w_i + N)]
        (the wavelet's support sits inside the same padded box).
        """
        point = np.asarray(point, dtype=float).ravel()
        n = self.support_len
        out = []
        per_axis = []
        m = 2**j
        for i in range(self.dim):
            y = point[i] * m if self.domain == "ball" else np.mod(point[i], 1.0) * m
            lo = int(np.ceil(y - n))
            hi = int(np.floor(y + n))
            ws = range(lo, hi + 1)
            if self.domain == "torus":
                ws = sorted({v % m for v in ws})
            per_axis.append(list(ws))
        from itertools import product

        types = list(self.genuine_types)
        if j == 0:
            types.append(self.scaling_type)
        for l in types:
            if l == self.scaling_type and self.domain == "torus":
                out.append((l, (0,) * self.dim))
                continue
            for combo in product(*per_axis):
                out.append((l, tuple(combo)))
        return out


def make_tables(nv: int, grid_level: int = 12, max_derivative: int | None = None):
    fb = daubechies_filter(nv)
    if max_derivative is None:
        max_derivative = 1 if nv >= 3 else 0
    phi = cascade_table(fb, grid_level, max_derivative)
    psi = wavelet_table(fb, phi)
    return fb, phi, psi


def torus_spec(dim: int, nv: int = 3, grid_level: int = 12, max_derivative: int | None = None) -> BasisSpec:
    fb, phi, psi = make_tables(nv, grid_level, max_derivative)
    return BasisSpec(dim, "torus", 0.0, fb, phi, psi)


def ball_spec(dim: int, radius: float, nv: int = 3, grid_level: int = 12, max_derivative: int | None = None) -> BasisSpec:
    fb, phi, psi = make_tables(nv, grid_level, max_derivative)
    return BasisSpec(dim, "ball", float(radius), fb, phi, psi)
