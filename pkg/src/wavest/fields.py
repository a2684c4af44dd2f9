"""Sparse wavelet coefficient fields, Besov norms and the level-rescaling
operator, plus the vectorized accumulate/synthesize kernels shared by
analysis, IPM moments and training.

Storage: one dense array per (level j, type l); absent arrays mean zero.
Torus arrays have shape (2^j,)^D indexed by z; ball arrays have shape
(window,)^D indexed by w - w_lo(j).  The sparse text format serializes
nonzero entries only.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSpec, WaveletIndex, _digits

__all__ = ["CoefficientField", "BoundSchedule", "analyze", "GridTooCoarseError"]


class GridTooCoarseError(ValueError):
    """Analysis grid does not resolve the requested truncation level."""


@dataclass(frozen=True)
class BoundSchedule:
    """Per-level coefficient box: bound(j) = c_eta * K * 2^(-j(eta + D/2))."""

    eta: float
    radius: float  # K
    dim: int
    c_eta: float = 1.0

    def bound(self, j) -> np.ndarray | float:
        j = np.asarray(j, dtype=float)
        out = self.c_eta * self.radius * np.exp2(-j * (self.eta + self.dim / 2.0))
        return float(out) if out.ndim == 0 else out


def _level_shape(spec: BasisSpec, j: int, l: int) -> tuple[int, ...]:
    if spec.domain == "torus":
        if l == spec.scaling_type:
            return (1,) * spec.dim
        return (2**j,) * spec.dim
    return (spec.window_size(j),) * spec.dim


@dataclass
class CoefficientField:
    """Map (j, l, w) -> coefficient, truncated at max_level."""

    spec: BasisSpec
    max_level: int
    levels: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    # ----------------------------------------------------------- bookkeeping

    def _valid_types(self, j: int) -> list[int]:
        types = list(self.spec.genuine_types)
        if j == 0:
            types.append(self.spec.scaling_type)
        return types

    def _array(self, j: int, l: int, create: bool = False) -> np.ndarray | None:
        if not 0 <= j <= self.max_level:
            raise KeyError(f"level {j} outside 0..{self.max_level}")
        if l not in self._valid_types(j):
            raise KeyError(f"type {l} invalid at level {j}")
        key = (j, l)
        if key not in self.levels:
            if not create:
                return None
            self.levels[key] = np.zeros(_level_shape(self.spec, j, l))
        return self.levels[key]

    def _windex(self, j: int, l: int, w: tuple[int, ...]) -> tuple[int, ...]:
        if self.spec.domain == "torus":
            if l == self.spec.scaling_type:
                if any(v != 0 for v in w):
                    raise KeyError("torus scaling layer only has the zero translate")
                return (0,) * self.spec.dim
            m = 2**j
            return tuple(int(v) % m for v in w)
        lo, hi = self.spec.translate_window(j)
        if any(not lo <= int(v) <= hi for v in w):
            raise KeyError(f"translate {w} outside window [{lo}, {hi}] at level {j}")
        return tuple(int(v) - lo for v in w)

    def get(self, idx: WaveletIndex) -> float:
        arr = self._array(idx.j, idx.l)
        if arr is None:
            return 0.0
        return float(arr[self._windex(idx.j, idx.l, idx.w)])

    def set(self, idx: WaveletIndex, value: float) -> None:
        arr = self._array(idx.j, idx.l, create=True)
        arr[self._windex(idx.j, idx.l, idx.w)] = value

    def entries(self):
        """Yield (WaveletIndex, value) for stored nonzeros, sorted."""
        for (j, l) in sorted(self.levels):
            arr = self.levels[(j, l)]
            nz = np.argwhere(arr != 0.0)
            if self.spec.domain == "ball":
                lo, _ = self.spec.translate_window(j)
            else:
                lo = 0
            for widx in nz:
                w = tuple(int(v) + lo for v in widx)
                yield WaveletIndex(j, l, w), float(arr[tuple(widx)])

    def copy(self) -> "CoefficientField":
        return CoefficientField(
            self.spec, self.max_level, {k: v.copy() for k, v in self.levels.items()}
        )

    def n_coeffs(self) -> int:
        return sum(v.size for v in self.levels.values())

    # ------------------------------------------------------------- algebra

    def scaled(self, a: float) -> "CoefficientField":
        return CoefficientField(
            self.spec, self.max_level, {k: a * v for k, v in self.levels.items()}
        )

    def plus(self, other: "CoefficientField", b: float = 1.0) -> "CoefficientField":
        if other.spec is not self.spec and (
            other.spec.dim != self.spec.dim
            or other.spec.domain != self.spec.domain
            or other.spec.radius != self.spec.radius
            or other.spec.nv != self.spec.nv
        ):
            raise ValueError("field specs differ")
        out = self.copy()
        out.max_level = max(self.max_level, other.max_level)
        for k, v in other.levels.items():
            if k in out.levels:
                out.levels[k] = out.levels[k] + b * v
            else:
                out.levels[k] = b * v
        return out

    def besov_norm(self, s: float, b: float = 0.0) -> float:
        """sup_j 2^(j(s + D/2)) (1+j)^b sum_l sup_w |alpha(j,l,w)|."""
        d = self.spec.dim
        per_level: dict[int, float] = {}
        for (j, l), arr in self.levels.items():
            if arr.size:
                per_level[j] = per_level.get(j, 0.0) + float(np.max(np.abs(arr)))
        best = 0.0
        for j, tot in per_level.items():
            best = max(best, 2.0 ** (j * (s + d / 2.0)) * (1.0 + j) ** b * tot)
        return best

    def gamma_op(self, gamma: float, c: float = 0.0) -> "CoefficientField":
        """Coefficientwise rescale by 2^(j*gamma) (1+j)^c."""
        out = {}
        for (j, l), arr in self.levels.items():
            out[(j, l)] = arr * (2.0 ** (j * gamma) * (1.0 + j) ** c)
        return CoefficientField(self.spec, self.max_level, out)

    def project_box(self, schedule: BoundSchedule) -> "CoefficientField":
        out = {}
        for (j, l), arr in self.levels.items():
            bnd = schedule.bound(j)
            out[(j, l)] = np.clip(arr, -bnd, bnd)
        return CoefficientField(self.spec, self.max_level, out)

    def in_box(self, schedule: BoundSchedule, slack: float = 0.0) -> bool:
        for (j, l), arr in self.levels.items():
            if arr.size and np.max(np.abs(arr)) > schedule.bound(j) + slack:
                return False
        return True

    # ------------------------------------------------------------ evaluation

    def synthesize(self, points) -> np.ndarray:
        """sum over stored indices of alpha * basis(point), vectorized."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(points.shape[0])
        for (j, l), arr in self.levels.items():
            out += _synth_level(self.spec, j, l, arr, points)
        return out

    def synthesize_gradient(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros((points.shape[0], self.spec.dim))
        for (j, l), arr in self.levels.items():
            for axis in range(self.spec.dim):
                out[:, axis] += _synth_level(self.spec, j, l, arr, points, diff_axis=axis)
        return out

    # ---------------------------------------------------------------- text IO

    def to_text(self, header_extra: dict | None = None) -> str:
        buf = io.StringIO()
        buf.write("#schema=coefficient_field.v1\n")
        spec = self.spec
        buf.write(f"#dim={spec.dim}\n")
        buf.write(f"#domain={spec.domain}\n")
        buf.write(f"#radius={spec.radius:.17g}\n")
        buf.write(f"#nv={spec.nv}\n")
        buf.write(f"#max_level={self.max_level}\n")
        if header_extra:
            for k in sorted(header_extra):
                buf.write(f"#{k}={header_extra[k]}\n")
        buf.write("j l " + " ".join(f"w{i+1}" for i in range(spec.dim)) + " value\n")
        for idx, val in self.entries():
            ws = " ".join(str(v) for v in idx.w)
            buf.write(f"{idx.j} {idx.l} {ws} {val:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str, spec: BasisSpec) -> tuple["CoefficientField", dict]:
        lines = text.strip().splitlines()
        if not lines[0].startswith("#schema=coefficient_field"):
            raise ValueError("not a coefficient field file")
        meta: dict[str, str] = {}
        i = 1
        while lines[i].startswith("#"):
            k, v = lines[i][1:].split("=", 1)
            meta[k] = v
            i += 1
        if int(meta["dim"]) != spec.dim or meta["domain"] != spec.domain:
            raise ValueError("spec mismatch with serialized field")
        cf = cls(spec, int(meta["max_level"]))
        for line in lines[i + 1 :]:
            parts = line.split()
            j, l = int(parts[0]), int(parts[1])
            w = tuple(int(v) for v in parts[2 : 2 + spec.dim])
            cf.set(WaveletIndex(j, l, w), float(parts[2 + spec.dim]))
        return cf, meta


# ====================================================================== kernels


def _torus_factors(spec: BasisSpec, j: int, points: np.ndarray, deriv_axis: int | None):
    """Per-axis dense folded factor matrices for both factor kinds.

    Returns list over axes of (F0, F1) with shape (npts, 2^j).
    """
    out = []
    for i in range(spec.dim):
        d = 1 if deriv_axis == i else 0
        f0 = spec.axis_factor_torus(j, points[:, i], 0, d)
        f1 = spec.axis_factor_torus(j, points[:, i], 1, d)
        out.append((f0, f1))
    return out


def _synth_level(
    spec: BasisSpec,
    j: int,
    l: int,
    arr: np.ndarray,
    points: np.ndarray,
    diff_axis: int | None = None,
) -> np.ndarray:
    npts = points.shape[0]
    if spec.domain == "torus":
        if l == spec.scaling_type:
            if diff_axis is not None:
                return np.zeros(npts)
            return np.full(npts, float(arr.ravel()[0]))
        digits = _digits(l, spec.dim)
        facs = []
        for i in range(spec.dim):
            d = 1 if diff_axis == i else 0
            facs.append(spec.axis_factor_torus(j, points[:, i], digits[i], d))
        return _contract_dense(arr, facs)
    # ball domain
    if l == spec.scaling_type:
        if j != 0:
            return np.zeros(npts)
        digits = (0,) * spec.dim
        scale = 1.0
    else:
        digits = _digits(l, spec.dim)
        scale = 2.0 ** (j * spec.dim / 2.0)
    lo, _ = spec.translate_window(j)
    size = spec.window_size(j)
    offs_list, vals_list = [], []
    for i in range(spec.dim):
        y = np.ldexp(points[:, i], j)
        d = 1 if diff_axis == i else 0
        offs, vals = spec._axis_offsets_values(y, digits[i], d)
        if d:
            vals = vals * 2.0**j
        idx = offs - lo
        ok = (idx >= 0) & (idx < size)
        vals = np.where(ok, vals, 0.0)
        idx = np.clip(idx, 0, size - 1)
        offs_list.append(idx)
        vals_list.append(vals)
    gathered = _gather_product(arr, offs_list, vals_list)
    return scale * gathered


def _contract_dense(arr: np.ndarray, facs: list[np.ndarray]) -> np.ndarray:
    """sum_z arr[z1..zD] * prod_i F_i[n, z_i] for dense torus factors."""
    d = len(facs)
    if d == 1:
        return facs[0] @ arr
    if d == 2:
        return np.einsum("ab,na,nb->n", arr, facs[0], facs[1], optimize=True)
    if d == 3:
        return np.einsum("abc,na,nb,nc->n", arr, facs[0], facs[1], facs[2], optimize=True)
    raise NotImplementedError("torus contraction implemented for D <= 3")


def _gather_product(arr: np.ndarray, offs: list[np.ndarray], vals: list[np.ndarray]) -> np.ndarray:
    """sum over the per-axis candidate windows of arr[w] * prod_i vals_i."""
    d = len(offs)
    if d == 1:
        return np.sum(arr[offs[0]] * vals[0], axis=1)
    if d == 2:
        g = arr[offs[0][:, :, None], offs[1][:, None, :]]
        return np.einsum("nab,na,nb->n", g, vals[0], vals[1], optimize=True)
    if d == 3:
        g = arr[
            offs[0][:, :, None, None],
            offs[1][:, None, :, None],
            offs[2][:, None, None, :],
        ]
        return np.einsum("nabc,na,nb,nc->n", g, vals[0], vals[1], vals[2], optimize=True)
    raise NotImplementedError("gather implemented for D <= 3")


def accumulate_level(
    spec: BasisSpec,
    j: int,
    l: int,
    points: np.ndarray,
    weights: np.ndarray,
    strict: bool = True,
) -> np.ndarray:
    """sum_n weights[n] * basis_(j,l,w)(points[n]) as a dense w-array.

    Class discriminators vanish outside their translate windows, so
    contributions from points beyond the window are exactly zero for the
    class IPM; with ``strict`` they raise instead (the measure-vs-measure
    entry points require points inside the padded domain ball).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float)
    if spec.domain == "torus":
        if l == spec.scaling_type:
            return np.full((1,) * spec.dim, weights.sum())
        digits = _digits(l, spec.dim)
        facs = [
            spec.axis_factor_torus(j, points[:, i], digits[i]) for i in range(spec.dim)
        ]
        return _outer_accumulate_dense(weights, facs)
    if l == spec.scaling_type:
        if j != 0:
            raise KeyError("ball scaling layer exists only at level 0")
        digits = (0,) * spec.dim
        scale = 1.0
    else:
        digits = _digits(l, spec.dim)
        scale = 2.0 ** (j * spec.dim / 2.0)
    lo, _ = spec.translate_window(j)
    size = spec.window_size(j)
    offs_list, vals_list = [], []
    for i in range(spec.dim):
        y = np.ldexp(points[:, i], j)
        offs, vals = spec._axis_offsets_values(y, digits[i], 0)
        idx = offs - lo
        ok = (idx >= 0) & (idx < size)
        if strict and not ok.all():
            bad = np.abs(vals[~ok]).max() if (~ok).any() else 0.0
            if bad > 1e-12:
                raise ValueError("point outside basis window; enlarge domain radius")
        vals = np.where(ok, vals, 0.0)
        idx = np.clip(idx, 0, size - 1)
        offs_list.append(idx)
        vals_list.append(vals)
    return scale * _scatter_product(size, spec.dim, weights, offs_list, vals_list)


def _outer_accumulate_dense(weights: np.ndarray, facs: list[np.ndarray]) -> np.ndarray:
    d = len(facs)
    if d == 1:
        return (weights[:, None] * facs[0]).sum(axis=0)
    if d == 2:
        return np.einsum("n,na,nb->ab", weights, facs[0], facs[1], optimize=True)
    if d == 3:
        return np.einsum("n,na,nb,nc->abc", weights, facs[0], facs[1], facs[2], optimize=True)
    raise NotImplementedError("accumulation implemented for D <= 3")


def _scatter_product(
    size: int,
    dim: int,
    weights: np.ndarray,
    offs: list[np.ndarray],
    vals: list[np.ndarray],
) -> np.ndarray:
    if dim == 1:
        flat = np.bincount(
            offs[0].ravel(),
            weights=(weights[:, None] * vals[0]).ravel(),
            minlength=size,
        )
        return flat
    if dim == 2:
        contrib = np.einsum("n,na,nb->nab", weights, vals[0], vals[1], optimize=True)
        flat_idx = offs[0][:, :, None] * size + offs[1][:, None, :]
        return np.bincount(
            flat_idx.ravel(), weights=contrib.ravel(), minlength=size * size
        ).reshape(size, size)
    if dim == 3:
        contrib = np.einsum(
            "n,na,nb,nc->nabc", weights, vals[0], vals[1], vals[2], optimize=True
        )
        flat_idx = (
            offs[0][:, :, None, None] * size * size
            + offs[1][:, None, :, None] * size
            + offs[2][:, None, None, :]
        )
        return np.bincount(
            flat_idx.ravel(), weights=contrib.ravel(), minlength=size**3
        ).reshape(size, size, size)
    raise NotImplementedError("scatter implemented for D <= 3")


def accumulate_field(
    spec: BasisSpec,
    max_level: int,
    points: np.ndarray,
    weights: np.ndarray,
    chunk: int = 8192,
    strict: bool = True,
) -> CoefficientField:
    """Weighted moment field: alpha(j,l,w) = sum_n weights[n] psi_jlw(points[n])."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float)
    cf = CoefficientField(spec, max_level)
    for j in range(max_level + 1):
        types = list(spec.genuine_types)
        if j == 0:
            types.append(spec.scaling_type)
        for l in types:
            acc = None
            for start in range(0, points.shape[0], chunk):
                part = accumulate_level(
                    spec,
                    j,
                    l,
                    points[start : start + chunk],
                    weights[start : start + chunk],
                    strict=strict,
                )
                acc = part if acc is None else acc + part
            cf.levels[(j, l)] = acc if acc is not None else np.zeros(_level_shape(spec, j, l))
    return cf


def analyze(
    f,
    spec: BasisSpec,
    max_level: int,
    grid_levels_extra: int = 6,
) -> CoefficientField:
    """Wavelet analysis of a function on the torus by midpoint quadrature.

    ``f`` maps an (n, D) array of torus points to values.  The quadrature grid
    has 2^(max_level + grid_levels_extra) points per axis; fewer than
    max_level + 6 dyadic levels is rejected as too coarse.
    """
    if spec.domain != "torus":
        raise NotImplementedError("analysis quadrature is implemented on the torus")
    if grid_levels_extra < 6:
        raise GridTooCoarseError("need at least max_level + 6 dyadic levels")
    res = max_level + grid_levels_extra
    npts = 2**res
    axes = [(np.arange(npts) + 0.5) / npts] * spec.dim
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.asarray(f(points), dtype=float)
    weights = vals / points.shape[0]
    return accumulate_field(spec, max_level, points, weights)


class PointFrame:
    """Cached per-level basis factors for a fixed point set.

    Training loops evaluate moments/synthesis at the same points every
    iteration; freezing the per-(level, type) product tensors and scatter
    indices turns each iteration into a multiply plus a bincount/gather.
    """

    _CACHE_LIMIT = 3_000_000  # elements per cached product tensor

    def __init__(
        self,
        spec: BasisSpec,
        points: np.ndarray,
        max_level: int,
        max_deriv: int = 0,
        strict: bool = True,
    ):
        self.spec = spec
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.max_level = max_level
        self.max_deriv = max_deriv
        self.strict = strict
        self._axis_ball = {}   # (j, axis, kind, deriv) -> (idx, vals)
        self._axis_torus = {}  # (j, axis, kind, deriv) -> dense (n, 2^j)
        self._prod = {}        # (j, l, diff_axis) -> (flat_idx or None, prod_vals, scale)
        for j in range(max_level + 1):
            for axis in range(spec.dim):
                for kind in (0, 1):
                    for dv in range(max_deriv + 1):
                        self._axis(j, axis, kind, dv)

    def _axis(self, j: int, axis: int, kind: int, dv: int):
        spec = self.spec
        if spec.domain == "torus":
            key = (j, axis, kind, dv)
            if key not in self._axis_torus:
                self._axis_torus[key] = spec.axis_factor_torus(
                    j, self.points[:, axis], kind, dv
                )
            return self._axis_torus[key]
        key = (j, axis, kind, dv)
        if key not in self._axis_ball:
            y = np.ldexp(self.points[:, axis], j)
            offs, vals = spec._axis_offsets_values(y, kind, dv)
            if dv:
                vals = vals * 2.0**j
            lo, _ = spec.translate_window(j)
            size = spec.window_size(j)
            idx = offs - lo
            ok = (idx >= 0) & (idx < size)
            if self.strict and not ok.all():
                bad = np.abs(vals[~ok]).max() if (~ok).any() else 0.0
                if bad > 1e-12:
                    raise ValueError("point outside basis window; enlarge domain radius")
            vals = np.where(ok, vals, 0.0)
            idx = np.clip(idx, 0, size - 1)
            self._axis_ball[key] = (idx, vals)
        return self._axis_ball[key]

    def _types(self, j: int) -> list[int]:
        types = list(self.spec.genuine_types)
        if j == 0:
            types.append(self.spec.scaling_type)
        return types

    def _parts(self, j: int, l: int, diff_axis: int | None):
        """(flat_idx, prod_vals, scale, level_size) with caching."""
        key = (j, l, diff_axis)
        if key in self._prod:
            return self._prod[key]
        spec = self.spec
        dim = spec.dim
        if l == spec.scaling_type:
            digits = (0,) * dim
            scale = 1.0
        else:
            digits = _digits(l, dim)
            scale = 2.0 ** (j * dim / 2.0) if spec.domain == "ball" else 1.0
        if spec.domain == "torus":
            facs = [
                self._axis(j, i, digits[i], 1 if diff_axis == i else 0)
                for i in range(dim)
            ]
            m = 2**j
            prod = facs[0]
            for f in facs[1:]:
                prod = prod[:, :, None] * f[:, None, :]
                prod = prod.reshape(prod.shape[0], -1)
            out = (None, prod, scale, m**dim)
        else:
            pairs = [
                self._axis(j, i, digits[i], 1 if diff_axis == i else 0)
                for i in range(dim)
            ]
            size = spec.window_size(j)
            idx = pairs[0][0]
            prod = pairs[0][1]
            for pi, pv in pairs[1:]:
                idx = idx[:, :, None] * size + pi[:, None, :]
                idx = idx.reshape(idx.shape[0], -1)
                prod = prod[:, :, None] * pv[:, None, :]
                prod = prod.reshape(prod.shape[0], -1)
            out = (idx, prod, scale, size**dim)
        if out[1].size <= self._CACHE_LIMIT:
            self._prod[key] = out
        return out

    def accumulate(self, weights: np.ndarray, max_level: int | None = None) -> CoefficientField:
        max_level = self.max_level if max_level is None else max_level
        weights = np.asarray(weights, dtype=float)
        cf = CoefficientField(self.spec, max_level)
        dim = self.spec.dim
        for j in range(max_level + 1):
            m = 2**j
            for l in self._types(j):
                if self.spec.domain == "torus" and l == self.spec.scaling_type:
                    cf.levels[(j, l)] = np.full((1,) * dim, weights.sum())
                    continue
                idx, prod, scale, total = self._parts(j, l, None)
                contrib = weights[:, None] * prod
                if idx is None:  # torus: every point sees every translate column
                    flat = contrib.sum(axis=0) * scale
                    cf.levels[(j, l)] = flat.reshape((m,) * dim)
                else:
                    flat = np.bincount(idx.ravel(), weights=contrib.ravel(), minlength=total)
                    size = self.spec.window_size(j)
                    cf.levels[(j, l)] = scale * flat.reshape((size,) * dim)
        return cf

    def synthesize(self, cf: CoefficientField, diff_axis: int | None = None) -> np.ndarray:
        out = np.zeros(self.points.shape[0])
        for (j, l), arr in cf.levels.items():
            if j > self.max_level:
                raise ValueError("frame does not cover the field's levels")
            if self.spec.domain == "torus" and l == self.spec.scaling_type:
                if diff_axis is None:
                    out += float(arr.ravel()[0])
                continue
            if self.spec.domain == "ball" and l == self.spec.scaling_type and j != 0:
                continue
            idx, prod, scale, total = self._parts(j, l, diff_axis)
            flat = arr.ravel()
            if idx is None:
                out += scale * (prod @ flat)
            else:
                out += scale * np.sum(flat[idx] * prod, axis=1)
        return out

    def synthesize_gradient(self, cf: CoefficientField) -> np.ndarray:
        return np.stack(
            [self.synthesize(cf, diff_axis=axis) for axis in range(self.spec.dim)],
            axis=1,
        )


def field_layout(spec: BasisSpec, max_level: int):
    """Deterministic (key, shape, slice) layout for flattening fields."""
    layout = []
    pos = 0
    for j in range(max_level + 1):
        types = list(spec.genuine_types)
        if j == 0:
            types.append(spec.scaling_type)
        for l in types:
            shape = _level_shape(spec, j, l)
            size = int(np.prod(shape))
            layout.append(((j, l), shape, slice(pos, pos + size)))
            pos += size
    return layout, pos


def field_to_vector(cf: CoefficientField, layout, total: int) -> np.ndarray:
    vec = np.zeros(total)
    for key, shape, sl in layout:
        arr = cf.levels.get(key)
        if arr is not None:
            vec[sl] = arr.ravel()
    return vec


def vector_to_field(vec: np.ndarray, spec: BasisSpec, max_level: int, layout) -> CoefficientField:
    cf = CoefficientField(spec, max_level)
    for key, shape, sl in layout:
        cf.levels[key] = vec[sl].reshape(shape)
    return cf


def schedule_bounds_vector(schedule: BoundSchedule, layout, total: int) -> np.ndarray:
    out = np.empty(total)
    for (j, l), shape, sl in layout:
        out[sl] = schedule.bound(j)
    return out
