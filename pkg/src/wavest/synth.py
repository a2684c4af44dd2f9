"""Analytic target families with known class constants, and push-forward
sampling.  These are the ground truth for every experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import WaveletIndex, torus_spec
from .fields import BoundSchedule, CoefficientField

__all__ = ["TargetFamily", "Target", "make_target", "sample_pushforward", "ball_volume"]


def ball_volume(p: int, radius: float) -> float:
    return math.pi ** (p / 2.0) / math.gamma(p / 2.0 + 1.0) * radius**p


def torus_distance(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    diff = np.abs(u - v)
    diff = np.minimum(diff, 1.0 - diff)
    return np.sqrt((diff**2).sum(axis=-1))


@dataclass(frozen=True)
class TargetFamily:
    kind: str  # circle | embedded-torus | perturbed-embedding | full-dim-density
    d: int
    p: int
    radius: float = 0.75  # circle/torus tube radius r
    major_radius: float = 0.0  # embedded-torus R (defaults to 2 r)
    amplitude: float = 0.0  # perturbation sup-norm cap
    level: int = 3  # perturbation truncation level
    beta: float = 1.0
    seed: int = 0
    density_radius: float = 1.0  # support radius of the bump density


@dataclass
class Target:
    family: TargetFamily
    bound_radius: float  # verified sup |g| (or density support radius)
    min_singular: float | None
    _eval: object = field(repr=False)
    _jac: object = field(repr=False, default=None)
    _pdf: object = field(repr=False, default=None)
    _sampler: object = field(repr=False, default=None)

    @property
    def d(self) -> int:
        return self.family.d

    @property
    def p(self) -> int:
        return self.family.p

    def __call__(self, u) -> np.ndarray:
        return self._eval(np.atleast_2d(np.asarray(u, dtype=float)))

    def jacobian(self, u) -> np.ndarray:
        if self._jac is None:
            raise ValueError(f"{self.family.kind} target has no jacobian")
        return self._jac(np.atleast_2d(np.asarray(u, dtype=float)))

    def pdf(self, x) -> np.ndarray:
        if self._pdf is None:
            raise ValueError(f"{self.family.kind} target has no density")
        return self._pdf(np.atleast_2d(np.asarray(x, dtype=float)))

    def sample(self, n: int, seed: int) -> np.ndarray:
        """n i.i.d. draws from the target measure."""
        if n < 1:
            raise ValueError("need n >= 1")
        if self._sampler is not None:
            return self._sampler(n, seed)
        rng = np.random.default_rng(seed)
        u = rng.random((n, self.d))
        return self(u)


class InvalidParamsError(ValueError):
    pass


def _circle_maps(fam: TargetFamily):
    r, p = fam.radius, fam.p

    def g(u):
        ang = 2.0 * math.pi * u[:, 0]
        out = np.zeros((u.shape[0], p))
        out[:, 0] = r * np.cos(ang)
        out[:, 1] = r * np.sin(ang)
        return out

    def jac(u):
        ang = 2.0 * math.pi * u[:, 0]
        out = np.zeros((u.shape[0], p, 1))
        out[:, 0, 0] = -2.0 * math.pi * r * np.sin(ang)
        out[:, 1, 0] = 2.0 * math.pi * r * np.cos(ang)
        return out

    return g, jac


def _torus_maps(fam: TargetFamily):
    r = fam.radius
    rr = fam.major_radius if fam.major_radius > 0 else 2.0 * r

    def g(u):
        a = 2.0 * math.pi * u[:, 0]
        b = 2.0 * math.pi * u[:, 1]
        out = np.zeros((u.shape[0], fam.p))
        out[:, 0] = (rr + r * np.cos(b)) * np.cos(a)
        out[:, 1] = (rr + r * np.cos(b)) * np.sin(a)
        out[:, 2] = r * np.sin(b)
        return out

    def jac(u):
        a = 2.0 * math.pi * u[:, 0]
        b = 2.0 * math.pi * u[:, 1]
        tau = 2.0 * math.pi
        out = np.zeros((u.shape[0], fam.p, 2))
        ring = rr + r * np.cos(b)
        out[:, 0, 0] = -tau * ring * np.sin(a)
        out[:, 1, 0] = tau * ring * np.cos(a)
        out[:, 0, 1] = -tau * r * np.sin(b) * np.cos(a)
        out[:, 1, 1] = -tau * r * np.sin(b) * np.sin(a)
        out[:, 2, 1] = tau * r * np.cos(b)
        return out

    return g, jac


def _perturbation_fields(fam: TargetFamily) -> list[CoefficientField]:
    """Seeded random coefficient fields inside the H^(beta+1) box schedule,
    rescaled so the synthesized perturbation stays within the amplitude cap."""
    spec = torus_spec(fam.d, nv=3)
    schedule = BoundSchedule(eta=fam.beta + 1.0, radius=1.0, dim=fam.d)
    rng = np.random.default_rng(fam.seed)
    fields = []
    for _ in range(fam.p):
        cf = CoefficientField(spec, fam.level)
        for j in range(fam.level + 1):
            bnd = schedule.bound(j)
            for l in spec.genuine_types:
                shape = (2**j,) * fam.d
                arr = rng.uniform(-bnd, bnd, size=shape)
                cf.levels[(j, l)] = arr
        fields.append(cf)
    # grid scan of the sup norm, then rescale to the amplitude cap
    axis = (np.arange(256) + 0.5) / 256.0
    mesh = np.meshgrid(*([axis] * fam.d), indexing="ij")
    pts = np.stack([v.ravel() for v in mesh], axis=1)
    vals = np.stack([f.synthesize(pts) for f in fields], axis=1)
    sup = float(np.max(np.linalg.norm(vals, axis=1)))
    if sup > 0 and fam.amplitude >= 0:
        fields = [f.scaled(fam.amplitude / max(sup, 1e-300)) for f in fields]
    return fields


def make_target(fam: TargetFamily) -> Target:
    """Build the analytic evaluators and verify the declared constants."""
    if fam.kind == "circle":
        if fam.d != 1 or fam.p < 2 or fam.radius <= 0:
            raise InvalidParamsError("circle needs d=1, p>=2, radius>0")
        g, jac = _circle_maps(fam)
        tgt = Target(fam, bound_radius=fam.radius, min_singular=2.0 * math.pi * fam.radius, _eval=g, _jac=jac)
    elif fam.kind == "embedded-torus":
        if fam.d != 2 or fam.p < 3 or fam.radius <= 0:
            raise InvalidParamsError("embedded-torus needs d=2, p>=3, radius>0")
        rr = fam.major_radius if fam.major_radius > 0 else 2.0 * fam.radius
        if rr <= fam.radius:
            raise InvalidParamsError("major radius must exceed tube radius")
        g, jac = _torus_maps(fam)
        tgt = Target(fam, bound_radius=rr + fam.radius, min_singular=None, _eval=g, _jac=jac)
    elif fam.kind == "perturbed-embedding":
        if fam.d != 1 or fam.p < 2:
            raise InvalidParamsError("perturbed-embedding built over the circle: d=1, p>=2")
        # reach of the base circle is its radius; the class demands
        # amplitude <= r / 4
        if fam.amplitude > fam.radius / 4.0 + 1e-12:
            raise InvalidParamsError("perturbation amplitude must be <= base radius / 4")
        g0, jac0 = _circle_maps(fam)
        vf = _perturbation_fields(fam)

        def g(u):
            out = g0(u)
            for i, f in enumerate(vf):
                out[:, i] += f.synthesize(u)
            return out

        def jac(u):
            out = jac0(u)
            for i, f in enumerate(vf):
                out[:, i, :] += f.synthesize_gradient(u)
            return out

        tgt = Target(fam, bound_radius=fam.radius + fam.amplitude, min_singular=None, _eval=g, _jac=jac)
    elif fam.kind == "full-dim-density":
        if fam.d != fam.p:
            raise InvalidParamsError("full-dim-density needs d = p")
        rr = fam.density_radius
        if rr <= 0:
            raise InvalidParamsError("density radius must be positive")
        p = fam.p
        mass = p * ball_volume(p, 1.0) * rr**p * (1.0 / p - 2.0 / (p + 2) + 1.0 / (p + 4))
        c = 1.0 / mass

        def pdf(x):
            r2 = (x**2).sum(axis=1) / rr**2
            out = np.zeros(x.shape[0])
            ok = r2 < 1.0
            out[ok] = c * (1.0 - r2[ok]) ** 2
            return out

        def sampler(n, seed):
            rng = np.random.default_rng(seed)
            out = np.empty((n, p))
            have = 0
            while have < n:
                m = max(2 * (n - have), 64)
                z = rng.normal(size=(m, p))
                z /= np.linalg.norm(z, axis=1, keepdims=True)
                rad = rr * rng.random(m) ** (1.0 / p)
                cand = z * rad[:, None]
                acc = rng.random(m) < (1.0 - (rad / rr) ** 2) ** 2
                took = cand[acc][: n - have]
                out[have : have + took.shape[0]] = took
                have += took.shape[0]
            return out

        tgt = Target(fam, bound_radius=rr, min_singular=None, _eval=None, _pdf=pdf, _sampler=sampler)
    else:
        raise InvalidParamsError(f"unknown target kind {fam.kind!r}")

    if tgt._eval is not None:
        # verify the declared image bound on a scan grid
        axis = (np.arange(512) + 0.5) / 512.0
        mesh = np.meshgrid(*([axis] * fam.d), indexing="ij")
        pts = np.stack([v.ravel() for v in mesh], axis=1)
        sup = float(np.max(np.linalg.norm(tgt(pts), axis=1)))
        if sup > tgt.bound_radius + 1e-9:
            raise InvalidParamsError(
                f"declared image bound {tgt.bound_radius} violated: scan found {sup}"
            )
    return tgt


@dataclass
class EmpiricalMeasureDraw:
    points: np.ndarray
    seed: int


def sample_pushforward(target: Target, n: int, seed: int):
    """n i.i.d. uniform torus points pushed through the target map (or draws
    from the density for full-dim targets), with uniform weights."""
    from .ipm import EmpiricalMeasure

    pts = target.sample(n, seed)
    return EmpiricalMeasure(pts, np.full(n, 1.0 / n))
