import numpy as np
import pytest

from wavest.filters import FilterBank, UnsupportedOrderError, daubechies_filter


def test_haar_is_forced_by_invariants():
    fb = daubechies_filter(1)
    assert np.allclose(fb.coeffs, [1.0, 1.0])


def test_db2_matches_closed_form():
    # Generated by spectral factorization, then checked against the
    # closed-form taps ((1+s3)/4, (3+s3)/4, (3-s3)/4, (1-s3)/4).
    fb = daubechies_filter(2)
    s3 = np.sqrt(3.0)
    ref = np.array([(1 + s3) / 4, (3 + s3) / 4, (3 - s3) / 4, (1 - s3) / 4])
    assert np.max(np.abs(fb.coeffs - ref)) < 1e-14


@pytest.mark.parametrize("nv", [1, 2, 3, 4, 5, 8, 12, 16, 20])
def test_invariants_all_orders(nv):
    fb = daubechies_filter(nv)
    res = fb.invariant_residuals()
    assert res["sum"] <= 1e-12
    assert res["orthonormality"] <= 1e-12
    assert res["moments"] <= 1e-12
    assert fb.support_length == 2 * nv - 1


@pytest.mark.parametrize("nv", [0, -3, 21, 2.5, "2"])
def test_unsupported_order_rejected(nv):
    with pytest.raises(UnsupportedOrderError):
        daubechies_filter(nv)


def test_sum_is_two_any_order():
    for nv in range(1, 21):
        assert abs(daubechies_filter(nv).coeffs.sum() - 2.0) < 1e-12


def test_max_tap_bounds():
    # C_h = max |h_k| lies in (1, 2) for the low orders that drive the
    # cascade fitting tolerance; it dips below 1 from nv = 8 on.
    for nv in range(2, 8):
        ch = daubechies_filter(nv).max_abs_tap()
        assert 1.0 < ch < 2.0
    for nv in range(1, 21):
        assert daubechies_filter(nv).max_abs_tap() < 2.0


def test_filterbank_immutable():
    fb = daubechies_filter(2)
    with pytest.raises(ValueError):
        fb.coeffs[0] = 0.0
