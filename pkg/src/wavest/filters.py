"""Daubechies conjugate-mirror filters in the sum-2 convention.

The filter taps h_0..h_N (N = 2*nv - 1) satisfy sum(h) = 2, the shifted
orthonormality relations sum_k h_k h_{k+2m} = 2*[m == 0], and nv vanishing
moments sum_k (-1)^k k^m h_k = 0 for m < nv.  This matches the refinement
equation phi(x) = sum_k h_k phi(2x - k) with unit-integral phi, not the
sqrt(2)-normalized signal-processing convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import mpmath as mp
import numpy as np

__all__ = ["FilterBank", "daubechies_filter", "UnsupportedOrderError"]

MAX_VANISHING_MOMENTS = 20


class UnsupportedOrderError(ValueError):
    """Requested filter order outside the supported 1..20 range."""


@dataclass(frozen=True)
class FilterBank:
    """Daubechies filter taps: ``coeffs[k] = h_k``, ``k = 0..2*nv-1``."""

    vanishing_moments: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))
        self.coeffs.setflags(write=False)

    @property
    def support_length(self) -> int:
        """N such that supp(phi) = [0, N]."""
        return len(self.coeffs) - 1

    @property
    def wavelet_support(self) -> tuple[float, float]:
        """Support of psi = sum_k (-1)^(k+1) h_{1-k} phi(2x - k)."""
        n = self.support_length
        return ((1 - n) / 2.0, (1 + n) / 2.0)

    def max_abs_tap(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def invariant_residuals(self) -> dict[str, float]:
        """Worst-case residual of each defining relation (diagnostics)."""
        h = self.coeffs
        nv = self.vanishing_moments
        res_sum = abs(h.sum() - 2.0)
        res_orth = 0.0
        for m in range(1, nv):
            res_orth = max(res_orth, abs(np.dot(h[: -2 * m], h[2 * m:])))
        res_orth = max(res_orth, abs(np.dot(h, h) - 2.0))
        k = np.arange(len(h), dtype=float)
        signs = np.where(np.arange(len(h)) % 2 == 0, 1.0, -1.0)
        # Alternating moment sums cancel terms of size k^m; normalize by that
        # scale so the residual stays meaningful at high orders.
        res_mom = max(
            abs(np.dot(signs * k**m, h)) / max(np.dot(k**m, np.abs(h)), 1.0)
            for m in range(nv)
        )
        return {"sum": res_sum, "orthonormality": res_orth, "moments": res_mom}


def _daubechies_taps_mp(nv: int, dps: int = 60) -> list[mp.mpf]:
    """Spectral factorization of the Daubechies polynomial at high precision.

    Writes m0(z) = ((1+z)/2)^nv * Q(z) with |Q(e^{-iw})|^2 = P(sin^2(w/2)),
    P(y) = sum_{k<nv} C(nv-1+k, k) y^k, keeps the roots of Q inside the unit
    disk (minimal-phase choice, the standard Daubechies filters), and returns
    taps normalized to sum 2.
    """
    with mp.workdps(dps):
        if nv == 1:
            return [mp.mpf(1), mp.mpf(1)]
        # P(y) coefficients, highest degree first for polyroots.
        pcoeffs = [mp.binomial(nv - 1 + k, k) for k in range(nv)][::-1]
        yroots = mp.polyroots(pcoeffs, maxsteps=200, extraprec=120)
        # Map each root y -> z via y = (2 - z - 1/z)/4, keep |z| < 1.
        zroots = []
        for y in yroots:
            # z^2 + (4y - 2) z + 1 = 0
            b = 4 * y - 2
            disc = mp.sqrt(b * b - 4)
            z1 = (-b + disc) / 2
            z2 = (-b - disc) / 2
            zroots.append(z1 if abs(z1) < 1 else z2)
        # Q(z) = prod (1 - z_i^{-1} z) up to scale; fix the scale by Q(1) = 1
        # (P(0) = 1 and the (1+z)/2 factor is 1 at z = 1).
        qpoly = [mp.mpc(1)]
        for z in zroots:
            nxt = [mp.mpc(0)] * (len(qpoly) + 1)
            for i, a in enumerate(qpoly):
                nxt[i] += a
                nxt[i + 1] -= a * z
            qpoly = nxt
        q1 = sum(qpoly)
        qpoly = [a / q1 for a in qpoly]
        # m0(z) = ((1+z)/2)^nv * Q(z); taps h_k = 2 * coeff_k of m0.
        m0 = [mp.mpc(1)]
        for _ in range(nv):
            nxt = [mp.mpc(0)] * (len(m0) + 1)
            for i, a in enumerate(m0):
                nxt[i] += a / 2
                nxt[i + 1] += a / 2
            m0 = nxt
        taps = [mp.mpc(0)] * (len(m0) + len(qpoly) - 1)
        for i, a in enumerate(m0):
            for j, b in enumerate(qpoly):
                taps[i + j] += a * b
        taps = [2 * t.real for t in taps]
        s = sum(taps)
        return [t * 2 / s for t in taps]


@lru_cache(maxsize=None)
def daubechies_filter(nv: int) -> FilterBank:
    """Construct the order-``nv`` Daubechies filter bank.

    Raises UnsupportedOrderError outside 1 <= nv <= 20.  The construction is
    carried out in 60-digit arithmetic so the float64 taps satisfy the three
    FilterBank invariants to well below 1e-12.
    """
    if not isinstance(nv, (int, np.integer)) or not 1 <= nv <= MAX_VANISHING_MOMENTS:
        raise UnsupportedOrderError(
            f"vanishing moments must be an integer in 1..{MAX_VANISHING_MOMENTS}, got {nv!r}"
        )
    taps = np.array([float(t) for t in _daubechies_taps_mp(int(nv))])
    return FilterBank(vanishing_moments=int(nv), coeffs=taps)
