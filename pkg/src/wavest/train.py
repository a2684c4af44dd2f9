"""Projected-subgradient estimators.

The inner discriminator supremum is always evaluated in closed form (see
ipm.py), so training is a single outer minimization over generator (or
density) coefficients: compute the moment mismatch, synthesize the
sign-pattern discriminator it induces, push its gradient back onto the
coefficient basis, step, project onto the coefficient box.  With smoothing
eps > 0 the per-moment |m| becomes sqrt(m^2 + eps^2) and the sign becomes
m / sqrt(m^2 + eps^2).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, fields as dc_fields

import numpy as np

from .basis import BasisSpec, ball_spec, torus_spec
from .fields import (
    BoundSchedule,
    CoefficientField,
    PointFrame,
    accumulate_field,
    analyze,
    field_layout,
    field_to_vector,
    schedule_bounds_vector,
    vector_to_field,
)
from .ipm import EmpiricalMeasure, box_ipm_from_moments, latent_points
from .models import (
    GeneratorModel,
    capped_discriminator_smoothness,
    default_discriminator_cutoff,
    default_generator_cutoff,
    level_from_cutoff,
    model_to_text,
    regularity_penalty_with_pushback,
)
from .synth import ball_volume

__all__ = [
    "TrainConfig",
    "TrainReport",
    "NonFiniteLossError",
    "fit_wgan",
    "fit_density_adversarial",
    "init_generator",
    "parse_kv",
]


class NonFiniteLossError(ArithmeticError):
    pass


@dataclass
class TrainConfig:
    # problem
    mode: str = "wgan"  # wgan | density
    n: int = 512
    d: int = 1
    p: int = 2
    beta: float = 1.0
    radius: float = 1.2  # K
    chi: float = 1.45
    c_eta: float = 2.0  # norm-equivalence constant; C_eta * K sizes the box
    nv: int = 3
    grid_level: int = 12
    # cutoffs (0 = auto from n)
    delta: float = 0.0
    delta_disc: float = 0.0
    level_cap: int = 6
    disc_level: int = -1  # -1 = from delta_disc
    # optimizer (normalized projected subgradient, step c/sqrt(t); the
    # convex density objective defaults to box-constrained L-BFGS-B)
    optimizer: str = "default"
    iterations: int = 60
    step_c: float = 0.1
    eps_smooth: float = 1e-6
    penalty_weight: float = 0.0
    grid_cap: int = 1_000_000
    coarse_grid: bool = False
    # latent / sampling
    m_latent: int = 0  # 0 = n
    latent_design: str = "fixed-iid"
    seed: int = 0
    # init
    init: str = "seed-embedding"  # zeros | random | seed-embedding
    init_radius: float = 0.0  # 0 = estimate from data
    init_seed: int = -1  # -1 = derive from seed; explicit for multi-start

    def resolved_delta(self) -> float:
        return self.delta if self.delta > 0 else default_generator_cutoff(self.n, self.beta, self.d)

    def resolved_delta_disc(self) -> float:
        if self.delta_disc > 0:
            return self.delta_disc
        return default_discriminator_cutoff(self.n, self.beta, self.d)

    def generator_level(self) -> int:
        return min(level_from_cutoff(self.resolved_delta()), self.level_cap)

    def discriminator_level(self) -> int:
        if self.disc_level >= 0:
            return self.disc_level
        return min(level_from_cutoff(self.resolved_delta_disc()), self.level_cap)

    def resolved_m(self) -> int:
        return self.m_latent if self.m_latent > 0 else self.n

    def echo(self) -> dict:
        return asdict(self)

    @classmethod
    def from_text(cls, text: str) -> "TrainConfig":
        kv = parse_kv(text)
        return cls.from_dict(kv)

    @classmethod
    def from_dict(cls, kv: dict) -> "TrainConfig":
        kwargs = {}
        valid = {f.name: f.type for f in dc_fields(cls)}
        for key, raw in kv.items():
            if key not in valid:
                continue
            current = getattr(cls, key, None)
            fld = next(f for f in dc_fields(cls) if f.name == key)
            typ = type(fld.default)
            if typ is bool:
                kwargs[key] = raw.lower() in ("1", "true", "yes", "on")
            elif typ is int:
                kwargs[key] = int(raw)
            elif typ is float:
                kwargs[key] = float(raw)
            else:
                kwargs[key] = raw
        cfg = cls(**kwargs)
        if cfg.eps_smooth < 0 or cfg.penalty_weight < 0 or cfg.iterations < 1:
            raise ValueError("require eps >= 0, penalty weight >= 0, iterations >= 1")
        return cfg


def parse_kv(text: str) -> dict:
    """Flat key=value config lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


@dataclass
class TrainReport:
    losses: list[float]
    best_losses: list[float]
    final_loss: float
    final_box_ipm: float
    penalty_value: float
    config: dict
    checkpoints: list[str] = field(default_factory=list)
    wall_time: float = 0.0  # measured, excluded from the serialized report

    def to_json(self) -> str:
        # wall_time is volatile and deliberately left out so identical
        # (config, seed) runs serialize byte-identically
        payload = {
            "losses": self.losses,
            "best_losses": self.best_losses,
            "final_loss": self.final_loss,
            "final_box_ipm": self.final_box_ipm,
            "penalty_value": self.penalty_value,
            "config": self.config,
            "checkpoints": self.checkpoints,
        }
        return json.dumps(payload, sort_keys=True, indent=1)


def _smooth_abs(m: np.ndarray, eps: float) -> np.ndarray:
    if eps > 0:
        return np.sqrt(m * m + eps * eps)
    return np.abs(m)


def _smooth_sign(m: np.ndarray, eps: float) -> np.ndarray:
    if eps > 0:
        return m / np.sqrt(m * m + eps * eps)
    return np.sign(m)


class WganProblem:
    """Closed-form WGAN loss on generator coefficients.

    loss(g) = sum_j bd(j) sum_{l,w} s_eps(mX - mPush(g)) + lam * penalty(g)
    """

    def __init__(self, x: EmpiricalMeasure, cfg: TrainConfig, gspec: BasisSpec, dspec: BasisSpec):
        self.cfg = cfg
        self.gspec = gspec
        self.dspec = dspec
        self.j_disc = cfg.discriminator_level()
        self.schedule_d = BoundSchedule(
            eta=capped_discriminator_smoothness(cfg.beta, cfg.d), radius=1.0, dim=cfg.p
        )
        self.mx = accumulate_field(dspec, self.j_disc, x.points, x.weights)
        self.latents = latent_points(cfg.latent_design, cfg.resolved_m(), cfg.d, cfg.seed + 104729)
        self.frame_lat = PointFrame(gspec, self.latents, cfg.generator_level())
        self._frame_pen = None
        self.eps = cfg.eps_smooth
        self.lam = cfg.penalty_weight

    def moment_mismatch(self, gm: GeneratorModel) -> CoefficientField:
        push = gm.eval(self.latents)
        m_push = accumulate_field(
            self.dspec,
            self.j_disc,
            push,
            np.full(len(self.latents), 1.0 / len(self.latents)),
            strict=False,
        )
        return self.mx.plus(m_push, -1.0)

    def loss(self, gm: GeneratorModel) -> float:
        m = self.moment_mismatch(gm)
        total = 0.0
        for (j, l), arr in m.levels.items():
            total += self.schedule_d.bound(j) * float(_smooth_abs(arr, self.eps).sum())
        if self.lam > 0:
            pen, _, _ = regularity_penalty_with_pushback(
                gm, cap=self.cfg.grid_cap, coarse=self.cfg.coarse_grid
            )
            total += self.lam * pen
        if not math.isfinite(total):
            raise NonFiniteLossError("loss diverged; reduce the step size")
        return total

    def loss_and_grad(self, gm: GeneratorModel):
        push = gm.eval(self.latents)
        mlat = len(self.latents)
        m_push = accumulate_field(self.dspec, self.j_disc, push, np.full(mlat, 1.0 / mlat), strict=False)
        m = self.mx.plus(m_push, -1.0)
        total = 0.0
        sign_field = CoefficientField(self.dspec, self.j_disc)
        for (j, l), arr in m.levels.items():
            bd = self.schedule_d.bound(j)
            total += bd * float(_smooth_abs(arr, self.eps).sum())
            sign_field.levels[(j, l)] = bd * _smooth_sign(arr, self.eps)
        # dLoss/dG_s = -(1/M) grad D*(G_s); push back onto the torus basis
        r = sign_field.synthesize_gradient(push)  # (M, p)
        grads = [self.frame_lat.accumulate(-r[:, i] / mlat, gm.max_level) for i in range(gm.p)]
        pen_val = 0.0
        if self.lam > 0:
            pen_val, grid_pts, dpen = regularity_penalty_with_pushback(
                gm, cap=self.cfg.grid_cap, coarse=self.cfg.coarse_grid
            )
            total += self.lam * pen_val
            if np.any(dpen):
                if self._frame_pen is None:
                    self._frame_pen = PointFrame(self.gspec, grid_pts, gm.max_level)
                for i in range(gm.p):
                    extra = self._frame_pen.accumulate(self.lam * dpen[:, i], gm.max_level)
                    grads[i] = grads[i].plus(extra)
        if not math.isfinite(total):
            raise NonFiniteLossError("loss diverged; reduce the step size")
        return total, grads, pen_val


def init_generator(cfg: TrainConfig, gspec: BasisSpec, x: EmpiricalMeasure | None = None) -> GeneratorModel:
    """Strategies: zeros; uniform random within the box (seeded); analysis of
    a seed embedding (circle of data-estimated radius, padded to R^p)."""
    gm = GeneratorModel.zeros(
        gspec,
        cfg.p,
        eta=cfg.beta + 1.0,
        delta=cfg.resolved_delta(),
        radius=cfg.radius,
        chi=cfg.chi,
        seed=cfg.seed,
        max_level=cfg.generator_level(),
        schedule=BoundSchedule(eta=cfg.beta + 1.0, radius=cfg.radius, dim=cfg.d, c_eta=cfg.c_eta),
    )
    if cfg.init == "zeros":
        return gm
    if cfg.init == "random":
        rng = np.random.default_rng((cfg.init_seed if cfg.init_seed >= 0 else cfg.seed) + 7919)
        for f in gm.fields:
            for j in range(f.max_level + 1):
                bnd = gm.schedule.bound(j)
                for l in gspec.genuine_types:
                    f.levels[(j, l)] = rng.uniform(-bnd, bnd, size=(2**j,) * cfg.d)
            f.levels[(0, gspec.scaling_type)] = rng.uniform(-gm.schedule.bound(0), gm.schedule.bound(0), size=(1,) * cfg.d)
        return gm.project_box()
    if cfg.init == "seed-embedding":
        r = cfg.init_radius
        if r <= 0:
            if x is None:
                raise ValueError("seed-embedding init needs data or init_radius")
            r = float(np.mean(np.linalg.norm(x.points, axis=1)))

        def embed(u):
            ang = 2.0 * math.pi * u[:, 0]
            out = np.zeros((u.shape[0], cfg.p))
            out[:, 0] = r * np.cos(ang)
            out[:, 1] = r * np.sin(ang)
            return out

        if cfg.d != 1:
            raise ValueError("seed-embedding init implemented for d = 1")
        for i in range(cfg.p):
            gm.fields[i] = analyze(lambda q, i=i: embed(q)[:, i], gspec, gm.fields[i].max_level)
        return gm.project_box()
    raise ValueError(f"unknown init strategy {cfg.init!r}")


def _gradient_norm(grads) -> float:
    if isinstance(grads, CoefficientField):
        grads = [grads]
    total = 0.0
    for g in grads:
        for arr in g.levels.values():
            total += float((arr * arr).sum())
    return math.sqrt(total)


def _descend(problem, model, cfg: TrainConfig, step_fn, project_fn, checkpoint_fn=None):
    """Projected subgradient descent with globally normalized directions and
    step c/sqrt(t); returns the best-so-far iterate."""
    losses: list[float] = []
    best_losses: list[float] = []
    best = None
    best_loss = math.inf
    checkpoints: list[str] = []
    t0 = time.perf_counter()
    for it in range(cfg.iterations):
        loss, grads, pen = problem.loss_and_grad(model)
        losses.append(loss)
        if loss < best_loss:
            best_loss = loss
            best = model.copy() if hasattr(model, "copy") else model
        best_losses.append(best_loss)
        step = cfg.step_c / math.sqrt(it + 1.0) / max(_gradient_norm(grads), 1e-300)
        model = step_fn(model, grads, step)
        model = project_fn(model)
        if checkpoint_fn is not None:
            path = checkpoint_fn(it, model)
            if path:
                checkpoints.append(path)
    final_loss = problem.loss(model)
    losses.append(final_loss)
    if final_loss < best_loss:
        best_loss = final_loss
        best = model.copy() if hasattr(model, "copy") else model
    best_losses.append(best_loss)
    wall = time.perf_counter() - t0
    return best, losses, best_losses, best_loss, checkpoints, wall


def fit_wgan(x: EmpiricalMeasure, cfg: TrainConfig, checkpoint_fn=None):
    """Minimize the closed-form class IPM to the sample, plus the injectivity
    penalty, by projected subgradient descent on generator coefficients."""
    if cfg.mode != "wgan":
        raise ValueError("config mode must be 'wgan'")
    if x.dim != cfg.p:
        raise ValueError("data dimension does not match p")
    sup = np.max(np.abs(x.points))
    if sup > cfg.radius:
        raise ValueError(f"data leaves the K-ball: max |x| = {sup} > K = {cfg.radius}")
    gspec = torus_spec(cfg.d, nv=cfg.nv, grid_level=cfg.grid_level)
    dspec = ball_spec(cfg.p, radius=cfg.radius, nv=cfg.nv, grid_level=cfg.grid_level)
    problem = WganProblem(x, cfg, gspec, dspec)
    gm = init_generator(cfg, gspec, x).project_box()

    def step_fn(model, grads, step):
        new_fields = [f.plus(g, -step) for f, g in zip(model.fields, grads)]
        out = model.copy()
        out.fields = new_fields
        return out

    best, losses, best_losses, best_loss, checkpoints, wall = _descend(
        problem, gm, cfg, step_fn, lambda m: m.project_box(), checkpoint_fn
    )
    m = problem.moment_mismatch(best)
    final_box = box_ipm_from_moments(m, problem.schedule_d)
    pen, _, _ = regularity_penalty_with_pushback(
        best, cap=cfg.grid_cap, coarse=cfg.coarse_grid
    )
    report = TrainReport(
        losses=losses,
        best_losses=best_losses,
        final_loss=best_loss,
        final_box_ipm=final_box,
        penalty_value=pen,
        config=cfg.echo(),
        checkpoints=checkpoints,
        wall_time=wall,
    )
    return best, report


class DensityProblem:
    """Closed-form adversarial density loss; linear in density coefficients.

    m(j,l,w) = mean_i psi(X_i) - (vol(B_K)/M) sum_s f(U_s) psi(U_s)

    The data and the uniform comparison sample are fixed, so all basis
    factors are frozen in point frames and one evaluation is a handful of
    tensor contractions.
    """

    def __init__(self, x: EmpiricalMeasure, cfg: TrainConfig, spec: BasisSpec):
        self.cfg = cfg
        self.spec = spec
        self.j_disc = cfg.discriminator_level()
        self.j_gen = cfg.generator_level()
        beta_t = min(cfg.beta, cfg.p / 2.0)  # full-dimensional cap
        self.schedule_d = BoundSchedule(eta=beta_t, radius=1.0, dim=cfg.p)
        self.mx = accumulate_field(spec, self.j_disc, x.points, x.weights)
        rng = np.random.default_rng(cfg.seed + 104729)
        m = cfg.resolved_m()
        z = rng.normal(size=(m, cfg.p))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        rad = cfg.radius * rng.random(m) ** (1.0 / cfg.p)
        self.u = z * rad[:, None]
        self.uvol = ball_volume(cfg.p, cfg.radius) / m
        self.eps = cfg.eps_smooth
        self.frame_u = PointFrame(spec, self.u, max(self.j_disc, self.j_gen))

    def moment_mismatch(self, f: CoefficientField) -> CoefficientField:
        fu = self.frame_u.synthesize(f)
        m_f = self.frame_u.accumulate(self.uvol * fu, self.j_disc)
        return self.mx.plus(m_f, -1.0)

    def loss(self, f: CoefficientField) -> float:
        m = self.moment_mismatch(f)
        total = 0.0
        for (j, l), arr in m.levels.items():
            total += self.schedule_d.bound(j) * float(_smooth_abs(arr, self.eps).sum())
        if not math.isfinite(total):
            raise NonFiniteLossError("loss diverged")
        return total

    def loss_and_grad(self, f: CoefficientField):
        m = self.moment_mismatch(f)
        total = 0.0
        sign_field = CoefficientField(self.spec, self.j_disc)
        for (j, l), arr in m.levels.items():
            bd = self.schedule_d.bound(j)
            total += bd * float(_smooth_abs(arr, self.eps).sum())
            sign_field.levels[(j, l)] = bd * _smooth_sign(arr, self.eps)
        dstar_u = self.frame_u.synthesize(sign_field)
        grad = self.frame_u.accumulate(-self.uvol * dstar_u, self.j_gen)
        if not math.isfinite(total):
            raise NonFiniteLossError("loss diverged")
        return total, grad, 0.0


def fit_density_adversarial(x: EmpiricalMeasure, cfg: TrainConfig, checkpoint_fn=None):
    """Full-dimensional density estimator: minimize the closed-form
    discriminator supremum over box-constrained density coefficients.

    The smoothed objective is convex in the coefficients and the feasible
    set is a box, so the default optimizer is L-BFGS-B; the projected
    subgradient variant is available via optimizer=subgradient.
    """
    if cfg.mode != "density":
        raise ValueError("config mode must be 'density'")
    if cfg.p != cfg.d:
        raise ValueError("dimension-mismatch: density mode needs p == d")
    if len(x) < 1:
        raise ValueError("need n >= 1 data points")
    if x.dim != cfg.p:
        raise ValueError("data dimension does not match p")
    spec = ball_spec(cfg.p, radius=cfg.radius, nv=cfg.nv, grid_level=cfg.grid_level)
    problem = DensityProblem(x, cfg, spec)
    schedule_f = BoundSchedule(eta=cfg.beta, radius=cfg.radius, dim=cfg.p, c_eta=cfg.c_eta)
    j_gen = cfg.generator_level()
    f0 = CoefficientField(spec, j_gen)
    if cfg.init == "random":
        rng = np.random.default_rng((cfg.init_seed if cfg.init_seed >= 0 else cfg.seed) + 7919)
        layout, total = field_layout(spec, j_gen)
        bounds = schedule_bounds_vector(schedule_f, layout, total)
        f0 = vector_to_field(rng.uniform(-bounds, bounds), spec, j_gen, layout)

    optimizer = cfg.optimizer if cfg.optimizer != "default" else "lbfgs"
    t0 = time.perf_counter()
    if optimizer == "lbfgs":
        from scipy.optimize import minimize

        layout, total = field_layout(spec, j_gen)
        bounds = schedule_bounds_vector(schedule_f, layout, total)
        trace: list[float] = []

        def objective(vec):
            f = vector_to_field(vec, spec, j_gen, layout)
            loss, grad, _ = problem.loss_and_grad(f)
            trace.append(loss)
            return loss, field_to_vector(grad, layout, total)

        res = minimize(
            objective,
            field_to_vector(f0, layout, total),
            jac=True,
            method="L-BFGS-B",
            bounds=list(zip(-bounds, bounds)),
            options={"maxiter": cfg.iterations, "ftol": 1e-12, "gtol": 1e-10},
        )
        best_cf = vector_to_field(res.x, spec, j_gen, layout)
        final_loss = problem.loss(best_cf)
        losses = trace + [final_loss]
        best_losses = list(np.minimum.accumulate(losses))
        best_loss = best_losses[-1]
        checkpoints: list[str] = []
        wall = time.perf_counter() - t0
    elif optimizer == "subgradient":

        class FWrap:
            """Uniform interface for _descend over a bare coefficient field."""

            def __init__(self, cf):
                self.cf = cf

            def copy(self):
                return FWrap(self.cf.copy())

        class ProblemWrap:
            def loss_and_grad(self, w):
                return problem.loss_and_grad(w.cf)

            def loss(self, w):
                return problem.loss(w.cf)

        best, losses, best_losses, best_loss, checkpoints, wall = _descend(
            ProblemWrap(),
            FWrap(f0),
            cfg,
            lambda w, grad, step: FWrap(w.cf.plus(grad, -step)),
            lambda w: FWrap(w.cf.project_box(schedule_f)),
            checkpoint_fn,
        )
        best_cf = best.cf
    else:
        raise ValueError(f"unknown optimizer {optimizer!r}")

    m = problem.moment_mismatch(best_cf)
    final_box = box_ipm_from_moments(m, problem.schedule_d)
    report = TrainReport(
        losses=losses,
        best_losses=best_losses,
        final_loss=best_loss,
        final_box_ipm=final_box,
        penalty_value=0.0,
        config=cfg.echo(),
        checkpoints=checkpoints,
        wall_time=wall,
    )
    return best_cf, report
