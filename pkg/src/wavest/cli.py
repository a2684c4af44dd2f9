"""Batch command-line front end.

Subcommands: filters, table, fit, rates, interp-check.  Every command is
deterministic given its config and seeds; outputs carry a schema version
line.  Exit codes: 0 success, 2 invalid arguments/config, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .basis import ball_spec, torus_spec
from .dyadic import (
    BaseFitError,
    EigenSolveError,
    RegularityError,
    cascade_table,
)
from .fields import BoundSchedule, CoefficientField, accumulate_field
from .filters import UnsupportedOrderError, daubechies_filter
from .ipm import (
    EmpiricalMeasure,
    ball_ipm_from_moments,
    latent_points,
    moments_of_field,
)
from .models import model_from_text, model_to_text
from .synth import TargetFamily, make_target, sample_pushforward
from .train import (
    NonFiniteLossError,
    TrainConfig,
    fit_density_adversarial,
    fit_wgan,
    parse_kv,
)

# numeric failures exit 3; invalid requests (including RegularityError and
# BaseFitError, which subclass ValueError) exit 2
NUMERIC_ERRORS = (EigenSolveError, NonFiniteLossError, ArithmeticError)


def _fail(msg: str, code: int) -> int:
    print(f"wavest: error: {msg}", file=sys.stderr)
    return code


# ------------------------------------------------------------------- filters


def cmd_filters(args) -> int:
    fb = daubechies_filter(args.nv)
    res = fb.invariant_residuals()
    lines = ["#schema=filter_bank.v1", f"#nv={args.nv}", "k,h_k"]
    lines += [f"{k},{h:.17g}" for k, h in enumerate(fb.coeffs)]
    text = "\n".join(lines) + "\n"
    _write(args.output, text)
    print(
        f"sum={fb.coeffs.sum():.17g} residuals: sum={res['sum']:.3e} "
        f"orth={res['orthonormality']:.3e} moments={res['moments']:.3e}"
    )
    return 0


def cmd_table(args) -> int:
    fb = daubechies_filter(args.nv)
    t = cascade_table(fb, args.grid, args.deriv)
    _write(args.output, t.to_csv())
    resid = t.two_scale_residual(fb)
    print(f"two_scale_max_residual={resid:.3e}")
    if resid > 1e-10:
        return _fail(f"two-scale residual {resid:.3e} exceeds 1e-10", 3)
    return 0


# ----------------------------------------------------------------------- fit


def _target_from_config(kv: dict) -> TargetFamily:
    return TargetFamily(
        kind=kv.get("kind", "circle"),
        d=int(kv.get("d", 1)),
        p=int(kv.get("p", 2)),
        radius=float(kv.get("target_radius", 0.75)),
        major_radius=float(kv.get("target_major_radius", 0.0)),
        amplitude=float(kv.get("target_amplitude", 0.0)),
        level=int(kv.get("target_level", 3)),
        beta=float(kv.get("beta", 1.0)),
        seed=int(kv.get("target_seed", kv.get("seed", 0))),
        density_radius=float(kv.get("density_radius", 1.0)),
    )


def cmd_fit(args) -> int:
    with open(args.config) as fh:
        text = fh.read()
    kv = parse_kv(text)
    cfg = TrainConfig.from_dict(kv)
    if cfg.mode == "density" and cfg.p != cfg.d:
        return _fail("dimension-mismatch: density mode needs p == d", 2)
    fam = _target_from_config(kv)
    tgt = make_target(fam)
    x = sample_pushforward(tgt, cfg.n, cfg.seed + 1)
    if cfg.mode == "wgan":
        model, report = fit_wgan(x, cfg)
        model_text = model_to_text(model)
    elif cfg.mode == "density":
        fhat, report = fit_density_adversarial(x, cfg)
        model_text = fhat.to_text({"mode": "density", "seed": cfg.seed})
    else:
        return _fail(f"unknown mode {cfg.mode!r}", 2)
    _write(args.output + ".model.txt", model_text)
    _write(args.output + ".report.json", report.to_json() + "\n")
    print(f"final_loss={report.final_loss:.17g}", file=sys.stderr)
    print(f"wall_time_s={report.wall_time:.3f}", file=sys.stderr)
    return 0


# --------------------------------------------------------------------- rates

_RATES_CTX: dict = {}


def _rates_defaults(kv: dict) -> dict:
    return {
        "mode": kv.get("mode", "wgan"),
        "n_list": [int(v) for v in kv.get("n_list", "128,256,512,1024").split(",")],
        "trials": int(kv.get("trials", 3)),
        "gammas": [float(v) for v in kv.get("gammas", "1.0").split(",")],
        "b_weight": float(kv.get("b_weight", 0.0)),
        "score_level": int(kv.get("score_level", 5)),
        "ref_factor": int(kv.get("ref_factor", 10)),
        "workers": int(kv.get("workers", 4)),
        "seed": int(kv.get("seed", 0)),
        "trial_seeds": (
            [int(v) for v in kv["trial_seeds"].split(",")] if "trial_seeds" in kv else None
        ),
    }


def _rate_trial(task) -> list[tuple]:
    """One (n, trial) cell; reads the forked parent context."""
    n, trial, data_seed = task
    ctx = _RATES_CTX
    kv, rc = ctx["kv"], ctx["rc"]
    tgt = ctx["target"]
    spec = ctx["score_spec"]
    mref = ctx["ref_moments"]
    mode = rc["mode"]
    x = sample_pushforward(tgt, n, data_seed)
    kv_local = dict(kv)
    kv_local.update({"n": str(n), "seed": str(data_seed)})
    cfg = TrainConfig.from_dict(kv_local)
    if mode == "wgan":
        model, _ = fit_wgan(x, cfg)
        u = latent_points(cfg.latent_design, cfg.resolved_m(), cfg.d, data_seed + 5)
        push = model.eval(u)
        mcand = accumulate_field(
            spec, rc["score_level"], push, np.full(len(u), 1.0 / len(u)), strict=False
        )
    elif mode == "density":
        fhat, _ = fit_density_adversarial(x, cfg)
        mcand = moments_of_field(fhat, rc["score_level"])
        for key in list(mref.levels):
            mcand.levels.setdefault(key, np.zeros_like(mref.levels[key]))
    elif mode == "empirical":
        mcand = accumulate_field(spec, rc["score_level"], x.points, x.weights)
    else:
        raise ValueError(f"unknown rates mode {mode!r}")
    diff = mref.plus(mcand, -1.0)
    rows = []
    for gamma in rc["gammas"]:
        val = ball_ipm_from_moments(diff, gamma, rc["b_weight"])
        rows.append((n, trial, gamma, mode, val, data_seed, ctx["ref_n"]))
    return rows


def fit_slope(ns: np.ndarray, values: np.ndarray):
    """OLS slope of log(value) on log(n) with its standard error."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    a = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(a, y, rcond=None)
    slope, _ = coef
    dof = max(len(x) - 2, 1)
    resid = y - a @ coef
    s2 = float(resid @ resid) / dof
    sx = float(((x - x.mean()) ** 2).sum())
    stderr = math.sqrt(s2 / sx) if sx > 0 else float("nan")
    return float(slope), stderr


def cmd_rates(args) -> int:
    with open(args.config) as fh:
        kv = parse_kv(fh.read())
    rc = _rates_defaults(kv)
    if len(rc["n_list"]) < 4:
        return _fail("rates needs an n-grid with >= 4 values", 2)
    if rc["trials"] < 3:
        return _fail("rates needs >= 3 trials", 2)
    fam = _target_from_config(kv)
    tgt = make_target(fam)
    p = fam.p
    radius_k = float(kv.get("radius", 1.2))
    nv = int(kv.get("nv", 3))
    spec = ball_spec(p, radius=radius_k, nv=nv, grid_level=int(kv.get("grid_level", 12)))
    ref_n = rc["ref_factor"] * max(rc["n_list"])
    ref = sample_pushforward(tgt, ref_n, rc["seed"] - 1)
    mref = accumulate_field(spec, rc["score_level"], ref.points, ref.weights)

    _RATES_CTX.update(
        kv=kv, rc=rc, target=tgt, score_spec=spec, ref_moments=mref, ref_n=ref_n
    )
    tasks = []
    for ni, n in enumerate(rc["n_list"]):
        for trial in range(rc["trials"]):
            if rc["trial_seeds"] is not None:
                data_seed = rc["trial_seeds"][trial % len(rc["trial_seeds"])]
            else:
                data_seed = rc["seed"] + 7717 * trial + 977 * ni
            tasks.append((n, trial, data_seed))
    rows: list[tuple] = []
    if rc["workers"] > 1:
        with ProcessPoolExecutor(max_workers=rc["workers"]) as pool:
            for chunk in pool.map(_rate_trial, tasks):
                rows.extend(chunk)
    else:
        for task in tasks:
            rows.extend(_rate_trial(task))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    lines = ["#schema=rates.v1", "n,trial,gamma,mode,ipm_value,seed,ref_size"]
    for r in rows:
        lines.append(f"{r[0]},{r[1]},{r[2]:.17g},{r[3]},{r[4]:.17g},{r[5]},{r[6]}")
    _write(args.output + ".csv", "\n".join(lines) + "\n")

    beta = float(kv.get("beta", 1.0))
    d_eff = fam.d if rc["mode"] != "empirical" else fam.p
    denom = 2.0 * beta + (fam.p if rc["mode"] == "density" else fam.d)
    summary: dict = {
        "schema": "rates_summary.v1",
        "mode": rc["mode"],
        "n_list": rc["n_list"],
        "trials": rc["trials"],
        "ref_size": ref_n,
        "beta": beta,
        "gammas": {},
    }
    for gamma in rc["gammas"]:
        per_n = []
        for n in rc["n_list"]:
            vals = [r[4] for r in rows if r[0] == n and abs(r[2] - gamma) < 1e-12]
            per_n.append(float(np.mean(vals)))
        slope, stderr = fit_slope(np.array(rc["n_list"], dtype=float), np.array(per_n))
        smooth_branch = -(beta + gamma) / denom
        root_branch = -0.5
        if rc["mode"] == "empirical":
            theory = {
                "empirical_branch": -gamma / fam.p,
                "binding": "empirical",
            }
        else:
            theory = {
                "smooth_branch": smooth_branch,
                "root_branch": root_branch,
                "binding": "root" if smooth_branch < root_branch else "smooth",
            }
        summary["gammas"][f"{gamma:g}"] = {
            "fitted_slope": slope,
            "stderr": stderr,
            "mean_ipm_per_n": per_n,
            "theory": theory,
        }
    _write(args.output + "_summary.json", json.dumps(summary, sort_keys=True, indent=1) + "\n")
    for gamma, entry in summary["gammas"].items():
        print(f"gamma={gamma}: slope={entry['fitted_slope']:.4f} +- {entry['stderr']:.4f}")
    return 0


# --------------------------------------------------------------- interp check


def cmd_interp_check(args) -> int:
    with open(args.config) as fh:
        kv = parse_kv(fh.read())
    fam = _target_from_config(kv)
    if fam.kind != "circle":
        return _fail("interp-check ladder is built over the circle target", 2)
    tgt = make_target(fam)
    beta = float(kv.get("beta", 1.0))
    gamma = float(kv.get("gamma", 1.0))
    t_min_pow = int(kv.get("ladder_min_pow", 1))
    t_max_pow = int(kv.get("ladder_max_pow", 8))
    include_zero = kv.get("include_zero", "false").lower() in ("1", "true", "yes")
    m_quad = int(kv.get("m_quad", 8192))
    score_level = int(kv.get("score_level", 5))
    b_weight = float(kv.get("b_weight", 0.0))
    radius_k = float(kv.get("radius", 1.2))
    nv = int(kv.get("nv", 3))
    seed = int(kv.get("seed", 0))
    exponent = (beta + gamma) / (2.0 * beta + 1.0)

    spec = ball_spec(fam.p, radius=radius_k, nv=nv)
    gspec = torus_spec(fam.d, nv=nv)
    # fixed in-class direction: seeded coefficient field inside the
    # H^(beta+1) box, synthesized per output dimension
    rng = np.random.default_rng(seed + 31)
    sch = BoundSchedule(eta=beta + 1.0, radius=1.0, dim=fam.d)
    vlevel = int(kv.get("direction_level", 3))
    vfields = []
    for _ in range(fam.p):
        cf = CoefficientField(gspec, vlevel)
        for j in range(vlevel + 1):
            for l in gspec.genuine_types:
                cf.levels[(j, l)] = rng.uniform(-sch.bound(j), sch.bound(j), (2**j,) * fam.d)
        vfields.append(cf)
    u = latent_points("tensor-grid", m_quad, fam.d, seed)
    base_pts = tgt(u)
    v_pts = np.stack([f.synthesize(u) for f in vfields], axis=1)
    m_base = accumulate_field(
        spec, score_level, base_pts, np.full(len(u), 1.0 / len(u)), strict=False
    )
    ts = ([0.0] if include_zero else []) + [2.0**-k for k in range(t_min_pow, t_max_pow + 1)]
    rows = []
    for t in sorted(ts, reverse=True):
        pts = base_pts + t * v_pts
        m_t = accumulate_field(
            spec, score_level, pts, np.full(len(u), 1.0 / len(u)), strict=False
        )
        diff = m_t.plus(m_base, -1.0)
        d_high = ball_ipm_from_moments(diff, beta + 1.0, b_weight)
        d_gamma = ball_ipm_from_moments(diff, gamma, b_weight)
        if d_high > 0:
            ratio = d_gamma / d_high**exponent
            rows.append((t, d_high, d_gamma, f"{ratio:.17g}"))
        else:
            rows.append((t, d_high, d_gamma, "undefined"))
    lines = ["#schema=interp.v1", "t,d_high,d_gamma,ratio"]
    for t, dh, dg, ratio in rows:
        lines.append(f"{t:.17g},{dh:.17g},{dg:.17g},{ratio}")
    _write(args.output + ".csv", "\n".join(lines) + "\n")

    defined = [(dh, float(r)) for _, dh, _, r in rows if r != "undefined" and dh > 0]
    slope = float("nan")
    max_over_median = float("nan")
    if len(defined) >= 2:
        slope, _ = fit_slope(
            np.array([d for d, _ in defined]), np.array([r for _, r in defined])
        )
        ratios = np.array([r for _, r in defined])
        max_over_median = float(ratios.max() / np.median(ratios))
    summary = {
        "schema": "interp_summary.v1",
        "beta": beta,
        "gamma": gamma,
        "exponent": exponent,
        "log_ratio_slope": slope,
        "max_over_median_ratio": max_over_median,
        "score_level": score_level,
        "m_quad": m_quad,
    }
    _write(args.output + "_summary.json", json.dumps(summary, sort_keys=True, indent=1) + "\n")
    print(f"exponent={exponent:.6f} slope={slope:.4f} max/median={max_over_median:.3f}")
    return 0


# ---------------------------------------------------------------------- main


def _write(path: str, text: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="wavest",
        description="Wavelet-class adversarial distribution estimation toolkit",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filters", help="emit a Daubechies filter bank as CSV")
    p.add_argument("--nv", type=int, required=True, help="vanishing moments (1..20)")
    p.add_argument("-o", "--output", default="filters.csv")
    p.set_defaults(func=cmd_filters)

    p = sub.add_parser("table", help="emit an exact dyadic table as CSV")
    p.add_argument("--nv", type=int, required=True)
    p.add_argument("--grid", type=int, default=10, help="dyadic grid level")
    p.add_argument("--deriv", type=int, default=0, help="max derivative order")
    p.add_argument("-o", "--output", default="table.csv")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("fit", help="fit a generator or density per config")
    p.add_argument("config")
    p.add_argument("-o", "--output", default="fit")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rates", help="rate experiment over an n-grid")
    p.add_argument("config")
    p.add_argument("-o", "--output", default="rates")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("interp-check", help="interpolation-inequality ladder")
    p.add_argument("config")
    p.add_argument("-o", "--output", default="interp")
    p.set_defaults(func=cmd_interp_check)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except NUMERIC_ERRORS as exc:
        # checked before ValueError: several numeric failures subclass it
        return _fail(str(exc), 3)
    except (UnsupportedOrderError, ValueError, KeyError, OSError) as exc:
        return _fail(str(exc), 2)


if __name__ == "__main__":
    sys.exit(main())
