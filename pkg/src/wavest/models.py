"""Generator and discriminator classes with coefficient-box constraints,
plus the grid-based injectivity check and its training penalty.

A generator is a map T^d -> R^p stored as p periodised coefficient fields
truncated at level J = ceil(log2(1/delta)), every coefficient within the
per-level box bound(j) = c_eta * K * 2^(-j(eta + d/2)).  The regularity
check evaluates the map on the grid z / (2^5 sqrt(d) K^2 chi^2) and flags
pairs that are far on the torus but close in the image; the penalty is the
hinge form of the same condition and is what the trainer differentiates.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import BasisSpec, torus_spec
from .fields import BoundSchedule, CoefficientField

__all__ = [
    "GeneratorModel",
    "DiscriminatorSpec",
    "RegularityReport",
    "GridTooLargeError",
    "default_generator_cutoff",
    "default_discriminator_cutoff",
    "capped_discriminator_smoothness",
    "level_from_cutoff",
    "numerical_regularity_check",
    "regularity_penalty",
    "regularity_penalty_with_pushback",
    "min_singular_estimate",
    "model_to_text",
    "model_from_text",
]


class GridTooLargeError(ValueError):
    """Exact regularity grid exceeds the configured cap."""

    def __init__(self, required: int, cap: int):
        super().__init__(
            f"regularity grid needs {required} points, cap is {cap}; "
            "raise the cap or use coarse mode (advisory)"
        )
        self.required = required
        self.cap = cap


def default_generator_cutoff(n: int, beta: float, d: int) -> float:
    """delta_n = n^(-1/(2 beta + d))."""
    return float(n) ** (-1.0 / (2.0 * beta + d))


def capped_discriminator_smoothness(beta: float, d: int) -> float:
    """beta~ + 1 = (beta + 1) ^ d/2 — the regularity cap beyond which the
    estimation rate cannot improve."""
    return min(beta + 1.0, d / 2.0)


def default_discriminator_cutoff(n: int, beta: float, d: int) -> float:
    """delta~_n = n^(-1/(2 beta~ + d)); the exponent denominator degenerates
    to <= 0 when the d/2 cap binds hard (2 beta~ + d = 2d - 2 <= 0 for d = 1),
    in which case we clamp it to 1 and leave the cutoff to explicit config."""
    beta_t = capped_discriminator_smoothness(beta, d) - 1.0
    denom = max(2.0 * beta_t + d, 1.0)
    return float(n) ** (-1.0 / denom)


def level_from_cutoff(delta: float) -> int:
    if not 0 < delta <= 1:
        raise ValueError("cutoff must lie in (0, 1]")
    return max(0, int(math.ceil(math.log2(1.0 / delta))))


@dataclass
class GeneratorModel:
    """p periodised coefficient fields with class parameters."""

    d: int
    p: int
    eta: float  # beta + 1
    delta: float
    radius: float  # K
    chi: float
    fields: list[CoefficientField]
    schedule: BoundSchedule = None
    seed: int | None = None

    def __post_init__(self):
        if self.schedule is None:
            self.schedule = BoundSchedule(eta=self.eta, radius=self.radius, dim=self.d)
        if len(self.fields) != self.p:
            raise ValueError("need one coefficient field per output dimension")

    @property
    def spec(self) -> BasisSpec:
        return self.fields[0].spec

    @property
    def max_level(self) -> int:
        return self.fields[0].max_level

    @classmethod
    def zeros(
        cls,
        spec: BasisSpec,
        p: int,
        eta: float,
        delta: float,
        radius: float,
        chi: float,
        seed: int | None = None,
        max_level: int | None = None,
        schedule: BoundSchedule | None = None,
    ) -> "GeneratorModel":
        if max_level is None:
            max_level = level_from_cutoff(delta)
        fields = [CoefficientField(spec, max_level) for _ in range(p)]
        return cls(spec.dim, p, eta, delta, radius, chi, fields, schedule=schedule, seed=seed)

    def copy(self) -> "GeneratorModel":
        return replace(self, fields=[f.copy() for f in self.fields])

    # ------------------------------------------------------------ evaluation

    def __call__(self, u) -> np.ndarray:
        return self.eval(u)

    def eval(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return np.stack([f.synthesize(u) for f in self.fields], axis=1)

    def jacobian(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return np.stack([f.synthesize_gradient(u) for f in self.fields], axis=1)

    # ------------------------------------------------------------ projection

    def project_box(self) -> "GeneratorModel":
        return replace(self, fields=[f.project_box(self.schedule) for f in self.fields])

    def in_box(self, slack: float = 0.0) -> bool:
        return all(f.in_box(self.schedule, slack) for f in self.fields)

    # ------------------------------------------------------------ regularity

    def regularity_grid(self, chi: float | None = None, cap: int = 1_000_000, coarse: bool = False):
        """Grid points of the numerical regularity condition.

        The per-axis count is M + 1 with M = floor(2^5 sqrt(d) K^2 chi^2)
        (floor convention for the bracket).  In coarse mode the grid is
        strided down to the cap and results are advisory.
        """
        chi = self.chi if chi is None else chi
        if chi <= self.radius:
            raise ValueError("chi must exceed the class radius K")
        denom = 2.0**5 * math.sqrt(self.d) * self.radius**2 * chi**2
        m = int(math.floor(denom))
        total = (m + 1) ** self.d
        stride = 1
        if total > cap:
            if not coarse:
                raise GridTooLargeError(total, cap)
            while (m // stride + 1) ** self.d > cap:
                stride += 1
        axis = np.arange(0, m + 1, stride) / denom
        mesh = np.meshgrid(*([axis] * self.d), indexing="ij")
        pts = np.stack([v.ravel() for v in mesh], axis=1)
        return pts, stride > 1

    def regularity_pairs(self, chi: float | None = None, cap: int = 1_000_000, coarse: bool = False):
        """(grid, far-pair index arrays, image distances, advisory flag)."""
        chi = self.chi if chi is None else chi
        pts, advisory = self.regularity_grid(chi, cap, coarse)
        # periodised Euclidean distances on the torus
        diff = np.abs(pts[:, None, :] - pts[None, :, :])
        diff = np.minimum(diff, 1.0 - diff)
        torus_dist = np.sqrt((diff**2).sum(axis=2))
        ii, jj = np.nonzero(np.triu(torus_dist >= 1.0 / (4.0 * chi**2), k=1))
        img = self.eval(pts)
        image_dist = np.linalg.norm(img[ii] - img[jj], axis=1)
        return pts, ii, jj, image_dist, advisory


@dataclass
class RegularityReport:
    passed: bool
    threshold: float
    n_grid: int
    n_far_pairs: int
    violations: list[tuple[tuple[int, ...], tuple[int, ...], float]]
    advisory: bool

    def __bool__(self) -> bool:
        return self.passed


def numerical_regularity_check(
    gm: GeneratorModel,
    chi: float | None = None,
    cap: int = 1_000_000,
    coarse: bool = False,
    max_witnesses: int = 16,
) -> RegularityReport:
    """Fails iff some grid pair at torus distance >= 1/(4 chi^2) has image
    distance <= 1/(8 K chi^2)."""
    chi = gm.chi if chi is None else chi
    pts, ii, jj, image_dist, advisory = gm.regularity_pairs(chi, cap, coarse)
    thr = 1.0 / (8.0 * gm.radius * chi**2)
    bad = np.nonzero(image_dist <= thr)[0]
    denom = 2.0**5 * math.sqrt(gm.d) * gm.radius**2 * chi**2
    witnesses = []
    for b in bad[:max_witnesses]:
        zi = tuple(int(round(v * denom)) for v in pts[ii[b]])
        zj = tuple(int(round(v * denom)) for v in pts[jj[b]])
        witnesses.append((zi, zj, float(image_dist[b])))
    return RegularityReport(
        passed=bad.size == 0,
        threshold=thr,
        n_grid=pts.shape[0],
        n_far_pairs=ii.size,
        violations=witnesses,
        advisory=advisory,
    )


def regularity_penalty(
    gm: GeneratorModel,
    chi: float | None = None,
    cap: int = 1_000_000,
    coarse: bool = False,
) -> float:
    """sum over far pairs of ((8 K chi^2)^-2 - |g(z_i) - g(z_j)|^2) over the
    pairs whose image distance is at most (8 K chi^2)^-1.  Zero iff the
    numerical regularity check passes."""
    val, _, _ = regularity_penalty_with_pushback(gm, chi, cap, coarse)
    return val


def regularity_penalty_with_pushback(
    gm: GeneratorModel,
    chi: float | None = None,
    cap: int = 1_000_000,
    coarse: bool = False,
):
    """Penalty value plus d(penalty)/d(g(grid point)) for the trainer.

    Returns (value, grid points, gradient array of shape (n_grid, p)).
    """
    chi = gm.chi if chi is None else chi
    pts, ii, jj, image_dist, _ = gm.regularity_pairs(chi, cap, coarse)
    thr = 1.0 / (8.0 * gm.radius * chi**2)
    active = image_dist <= thr
    value = float(np.sum((thr**2 - image_dist[active] ** 2)))
    grad = np.zeros((pts.shape[0], gm.p))
    if active.any():
        img = gm.eval(pts)
        ia, ja = ii[active], jj[active]
        dvec = img[ia] - img[ja]  # d/dg term of -|g_i - g_j|^2
        np.add.at(grad, ia, -2.0 * dvec)
        np.add.at(grad, ja, 2.0 * dvec)
    return value, pts, grad


def min_singular_estimate(gm: GeneratorModel, grid_per_axis: int = 64) -> float:
    """min over a uniform torus grid of the smallest singular value of the
    Jacobian; an upper estimate of the true infimum."""
    axis = (np.arange(grid_per_axis) + 0.5) / grid_per_axis
    mesh = np.meshgrid(*([axis] * gm.d), indexing="ij")
    pts = np.stack([v.ravel() for v in mesh], axis=1)
    jac = gm.jacobian(pts)  # (n, p, d)
    sv = np.linalg.svd(jac, compute_uv=False)  # (n, min(p, d)) descending
    return float(sv[:, -1].min())


# --------------------------------------------------------------- persistence


def model_to_text(gm: GeneratorModel) -> str:
    buf = io.StringIO()
    buf.write("#schema=generator_model.v1\n")
    buf.write(f"#d={gm.d}\n#p={gm.p}\n")
    buf.write(f"#eta={gm.eta:.17g}\n#delta={gm.delta:.17g}\n")
    buf.write(f"#K={gm.radius:.17g}\n#chi={gm.chi:.17g}\n")
    buf.write(f"#seed={gm.seed if gm.seed is not None else ''}\n")
    buf.write(f"#nv={gm.spec.nv}\n#max_level={gm.max_level}\n")
    buf.write(f"#c_eta={gm.schedule.c_eta:.17g}\n")
    buf.write("i j l " + " ".join(f"w{k+1}" for k in range(gm.d)) + " value\n")
    for i, f in enumerate(gm.fields):
        for idx, val in f.entries():
            ws = " ".join(str(v) for v in idx.w)
            buf.write(f"{i} {idx.j} {idx.l} {ws} {val:.17g}\n")
    return buf.getvalue()


def model_from_text(text: str, spec: BasisSpec | None = None) -> GeneratorModel:
    from .basis import WaveletIndex

    lines = text.strip().splitlines()
    if not lines[0].startswith("#schema=generator_model"):
        raise ValueError("not a generator model file")
    meta: dict[str, str] = {}
    i = 1
    while lines[i].startswith("#"):
        k, v = lines[i][1:].split("=", 1)
        meta[k] = v
        i += 1
    d, p = int(meta["d"]), int(meta["p"])
    if spec is None:
        spec = torus_spec(d, nv=int(meta["nv"]))
    max_level = int(meta["max_level"])
    fields = [CoefficientField(spec, max_level) for _ in range(p)]
    for line in lines[i + 1 :]:
        parts = line.split()
        comp = int(parts[0])
        j, l = int(parts[1]), int(parts[2])
        w = tuple(int(v) for v in parts[3 : 3 + d])
        fields[comp].set(WaveletIndex(j, l, w), float(parts[3 + d]))
    gm = GeneratorModel(
        d=d,
        p=p,
        eta=float(meta["eta"]),
        delta=float(meta["delta"]),
        radius=float(meta["K"]),
        chi=float(meta["chi"]),
        fields=fields,
        schedule=BoundSchedule(
            eta=float(meta["eta"]), radius=float(meta["K"]), dim=d, c_eta=float(meta["c_eta"])
        ),
        seed=int(meta["seed"]) if meta.get("seed") else None,
    )
    return gm


@dataclass(frozen=True)
class DiscriminatorSpec:
    """Coefficient-box discriminator class on the ambient ball.

    The schedule radius is 1 (unit Besov-ish ball); the domain ball radius K
    sets the translate windows.
    """

    p: int
    eta: float  # beta~ + 1 (manifold case) or beta~ (density case)
    delta: float
    domain_radius: float

    @property
    def max_level(self) -> int:
        return level_from_cutoff(self.delta)

    def schedule(self) -> BoundSchedule:
        return BoundSchedule(eta=self.eta, radius=1.0, dim=self.p)

    @classmethod
    def auto(cls, n: int, beta: float, d: int, p: int, domain_radius: float) -> "DiscriminatorSpec":
        return cls(
            p=p,
            eta=capped_discriminator_smoothness(beta, d),
            delta=default_discriminator_cutoff(n, beta, d),
            domain_radius=domain_radius,
        )
