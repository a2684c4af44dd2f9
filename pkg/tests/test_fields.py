import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavest.basis import WaveletIndex, ball_spec, torus_spec
from wavest.fields import (
    BoundSchedule,
    CoefficientField,
    GridTooCoarseError,
    accumulate_field,
    analyze,
)


@pytest.fixture(scope="module")
def spec():
    return torus_spec(1, nv=3, grid_level=12)


def random_field(spec, rng, max_level=3):
    cf = CoefficientField(spec, max_level)
    cf.set(WaveletIndex(0, 2, (0,)), rng.normal())
    for j in range(max_level + 1):
        for z in range(2**j):
            cf.set(WaveletIndex(j, 1, (z,)), rng.normal() * 2.0 ** (-1.5 * j))
    return cf


# ------------------------------------------------------------------ norms


def test_besov_norm_zero_field(spec):
    assert CoefficientField(spec, 3).besov_norm(1.0, 0.0) == 0.0


def test_besov_norm_single_entry(spec):
    cf = CoefficientField(spec, 4)
    cf.set(WaveletIndex(3, 1, (2,)), -0.25)
    s, b = 1.5, 2.0
    expect = 2.0 ** (3 * (s + 0.5)) * 4.0**b * 0.25
    assert cf.besov_norm(s, b) == pytest.approx(expect, rel=1e-14)


def test_besov_norm_every_level_contributes_one(spec):
    s, b = 1.0, 1.0
    cf = CoefficientField(spec, 4)
    for j in range(5):
        val = 2.0 ** (-j * (s + 0.5)) * (1.0 + j) ** (-b)
        cf.set(WaveletIndex(j, 1, (0,)), val)
    assert cf.besov_norm(s, b) == pytest.approx(1.0, rel=1e-12)


def test_besov_norm_homogeneity_and_triangle(spec):
    rng = np.random.default_rng(0)
    a = random_field(spec, rng)
    b = random_field(spec, rng)
    s, w = 1.0, 0.0
    assert a.scaled(-3.0).besov_norm(s, w) == pytest.approx(3.0 * a.besov_norm(s, w), rel=1e-14)
    assert a.plus(b).besov_norm(s, w) <= a.besov_norm(s, w) + b.besov_norm(s, w) + 1e-12


# ------------------------------------------------------------------ gamma


def test_gamma_identity(spec):
    rng = np.random.default_rng(1)
    cf = random_field(spec, rng)
    out = cf.gamma_op(0.0, 0.0)
    for (j, l), arr in cf.levels.items():
        assert np.array_equal(out.levels[(j, l)], arr)


def test_gamma_composition_exact(spec):
    # with c = 0 every multiplier is a power of two, so float multiplication
    # is exact and the composition identity is bitwise; general weights agree
    # to a rounding ulp per application
    rng = np.random.default_rng(2)
    cf = random_field(spec, rng)
    a = cf.gamma_op(1.0, 0.0).gamma_op(2.0, 0.0)
    b = cf.gamma_op(3.0, 0.0)
    for key in cf.levels:
        assert np.array_equal(a.levels[key], b.levels[key])
    a2 = cf.gamma_op(1.0, 2.0).gamma_op(2.0, 1.0)
    b2 = cf.gamma_op(3.0, 3.0)
    for key in cf.levels:
        assert np.allclose(a2.levels[key], b2.levels[key], rtol=1e-14, atol=0)


def test_gamma_norm_shift_exact(spec):
    rng = np.random.default_rng(3)
    cf = random_field(spec, rng)
    assert cf.gamma_op(1.0, 2.0).besov_norm(1.0, 0.0) == pytest.approx(
        cf.besov_norm(2.0, 2.0), rel=1e-14
    )


@settings(max_examples=25, deadline=None)
@given(
    g1=st.integers(min_value=-2, max_value=2),
    g2=st.integers(min_value=-2, max_value=2),
    c1=st.integers(min_value=-1, max_value=2),
    c2=st.integers(min_value=-1, max_value=2),
)
def test_gamma_composition_property(g1, g2, c1, c2):
    spec = torus_spec(1, nv=2, grid_level=8)
    rng = np.random.default_rng(4)
    cf = random_field(spec, rng, max_level=2)
    a = cf.gamma_op(g1, c1).gamma_op(g2, c2)
    b = cf.gamma_op(g1 + g2, c1 + c2)
    for key in cf.levels:
        assert np.allclose(a.levels[key], b.levels[key], rtol=1e-13, atol=0)


# ------------------------------------------------------------------ analyze


def test_analyze_unit_basis_function(spec):
    idx0 = WaveletIndex(2, 1, (1,))
    cf = analyze(lambda p: spec.eval_basis_many(idx0, p), spec, 4)
    assert abs(cf.get(idx0) - 1.0) < 1e-4
    worst = max((abs(v) for i, v in cf.entries() if i != idx0), default=0.0)
    assert worst < 1e-4


def test_analyze_constant(spec):
    cf = analyze(lambda p: np.ones(p.shape[0]), spec, 3)
    assert cf.get(WaveletIndex(0, 2, (0,))) == pytest.approx(1.0, abs=1e-12)
    worst = max(
        (abs(v) for i, v in cf.entries() if i != WaveletIndex(0, 2, (0,))), default=0.0
    )
    assert worst < 1e-12


def test_analyze_rejects_coarse_grid(spec):
    with pytest.raises(GridTooCoarseError):
        analyze(lambda p: np.ones(p.shape[0]), spec, 3, grid_levels_extra=4)


def test_parseval_band_limited(spec):
    rng = np.random.default_rng(5)
    cf = random_field(spec, rng)
    xs = ((np.arange(2**14) + 0.5) / 2**14)[:, None]
    f2 = np.mean(cf.synthesize(xs) ** 2)
    s2 = sum(v * v for _, v in cf.entries())
    assert abs(f2 - s2) < 1e-3


def test_round_trip_analyze_synthesize(spec):
    rng = np.random.default_rng(6)
    cf = random_field(spec, rng)
    back = analyze(cf.synthesize, spec, cf.max_level)
    for idx, v in cf.entries():
        assert abs(back.get(idx) - v) < 1e-4


def test_synthesize_empty_and_linearity(spec):
    rng = np.random.default_rng(7)
    pts = rng.random((40, 1))
    assert np.all(CoefficientField(spec, 2).synthesize(pts) == 0.0)
    f1 = random_field(spec, rng)
    f2 = random_field(spec, rng)
    lhs = f1.scaled(2.5).plus(f2).synthesize(pts)
    rhs = 2.5 * f1.synthesize(pts) + f2.synthesize(pts)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_synthesize_gradient_matches_fd_smooth():
    spec = torus_spec(1, nv=6, grid_level=12)
    rng = np.random.default_rng(8)
    cf = CoefficientField(spec, 2)
    for j in range(3):
        for z in range(2**j):
            cf.set(WaveletIndex(j, 1, (z,)), rng.normal())
    pts = rng.random((20, 1))
    h = 1e-5
    g = cf.synthesize_gradient(pts)[:, 0]
    fd = (cf.synthesize(pts + h) - cf.synthesize(pts - h)) / (2 * h)
    assert np.max(np.abs(g - fd)) < 1e-4 * max(1.0, np.max(np.abs(g)))


# ------------------------------------------------------------------ moments


def test_accumulate_matches_direct_eval_ball():
    spec = ball_spec(2, radius=1.5, nv=2, grid_level=10)
    rng = np.random.default_rng(9)
    pts = rng.uniform(-1.2, 1.2, (30, 2))
    wts = rng.random(30)
    mf = accumulate_field(spec, 2, pts, wts)
    for _ in range(30):
        j = int(rng.integers(0, 3))
        l = int(rng.integers(1, 4))
        lo, hi = spec.translate_window(j)
        w = tuple(rng.integers(lo, hi + 1, 2))
        direct = float(wts @ spec.eval_basis_many(WaveletIndex(j, l, w), pts))
        assert abs(mf.get(WaveletIndex(j, l, w)) - direct) < 1e-12


def test_out_of_window_point_rejected():
    spec = ball_spec(2, radius=1.5, nv=2, grid_level=10)
    with pytest.raises(ValueError):
        accumulate_field(spec, 2, np.array([[9.0, 0.0]]), np.array([1.0]))


# ------------------------------------------------------------------ text IO


def test_field_text_roundtrip(spec):
    rng = np.random.default_rng(10)
    cf = random_field(spec, rng)
    text = cf.to_text({"note": "x"})
    back, meta = CoefficientField.from_text(text, spec)
    assert meta["note"] == "x"
    assert back.to_text({"note": "x"}) == text
    for idx, v in cf.entries():
        assert back.get(idx) == v


def test_field_text_roundtrip_ball():
    spec = ball_spec(2, radius=1.25, nv=2, grid_level=8)
    cf = CoefficientField(spec, 1)
    cf.set(WaveletIndex(0, 4, (-1, 2)), 1.0 / 3.0)
    cf.set(WaveletIndex(1, 3, (0, -2)), -np.pi)
    back, _ = CoefficientField.from_text(cf.to_text(), spec)
    assert back.get(WaveletIndex(1, 3, (0, -2))) == -np.pi
    assert back.to_text() == cf.to_text()


# ------------------------------------------------------------------ schedule


def test_bound_schedule_decreasing():
    sch = BoundSchedule(eta=2.0, radius=1.5, dim=2)
    bounds = sch.bound(np.arange(8))
    assert np.all(bounds > 0)
    assert np.all(np.diff(bounds) < 0)
    assert sch.bound(0) == 1.5
