"""Exact Fourier integrals of piecewise-quadratic interpolants.

The kernel samples are read as the piecewise-quadratic interpolant on panels
of two grid cells (Simpson panels), and

    I_r(lam) = int (i x)^r w(x) exp(i lam x) dx

is computed exactly for that interpolant.  A plain trapezoid on the kernel
grid aliases as soon as |lam| * h is of order one, which happens long before
the eigenvalue index reaches the sizes used for reconstruction.
"""

from __future__ import annotations

import math

import numpy as np

_SERIES_RADIUS = 4.0
_SERIES_TERMS = 48


def unit_moments(theta, pmax: int) -> np.ndarray:
    """J_p(theta) = int_0^1 u^p exp(i theta u) du for p = 0..pmax.

    Returns an array of shape theta.shape + (pmax + 1,).  Small |theta| uses
    the power series; otherwise the upward recurrence
    J_p = (exp(i theta) - p J_{p-1}) / (i theta), stable once |theta| > pmax/2.
    """
    theta = np.asarray(theta, dtype=complex)
    out = np.empty(theta.shape + (pmax + 1,), dtype=complex)
    small = np.abs(theta) < max(_SERIES_RADIUS, 0.5 * pmax)

    if np.any(small):
        t = 1j * theta[small]
        n = np.arange(_SERIES_TERMS)
        # (i theta)^n / n!
        coef = np.ones(t.shape + (_SERIES_TERMS,), dtype=complex)
        for k in range(1, _SERIES_TERMS):
            coef[..., k] = coef[..., k - 1] * t / k
        for p in range(pmax + 1):
            out[small, p] = coef @ (1.0 / (n + p + 1))

    big = ~small
    if np.any(big):
        it = 1j * theta[big]
        e = np.exp(it)
        prev = (e - 1.0) / it
        out[big, 0] = prev
        for p in range(1, pmax + 1):
            prev = (e - p * prev) / it
            out[big, p] = prev
    return out


def _binom_row(r: int) -> list[int]:
    return [math.comb(r, c) for c in range(r + 1)]


class PanelIntegrator:
    """Precomputed panel data for fast evaluation of I_r(lam) on many lam.

    ``nodes`` must be uniform with an even number of cells.  ``values`` may be
    1-D (one function) and are read as the quadratic interpolant per panel.
    """

    def __init__(self, nodes, values):
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=complex)
        cells = nodes.size - 1
        if cells < 2 or cells % 2:
            raise ValueError("need an even number of grid cells")
        self.width = (nodes[-1] - nodes[0]) / (cells // 2)
        self.starts = nodes[0:-1:2]
        self.f0 = values[0:-1:2]
        self.f1 = values[1::2]
        self.f2 = values[2::2]
        # quadratic in u on [0, 1]: f0 (1 - 3u + 2u^2) + f1 (4u - 4u^2) + f2 (-u + 2u^2)
        self.poly = np.stack([
            self.f0,
            -3 * self.f0 + 4 * self.f1 - self.f2,
            2 * self.f0 - 4 * self.f1 + 2 * self.f2,
        ])
        self.is_zero = not np.any(values)

    def _panel_matrix(self, r: int) -> np.ndarray:
        """Coefficients C[p, d] such that the panel integrand polynomial is
        sum_d C[p, d] u^d for x^r * w(x), x = start_p + width * u."""
        s, X = self.width, self.starts
        comb = _binom_row(r)
        C = np.zeros((X.size, r + 3), dtype=complex)
        for c in range(r + 1):
            xc = comb[c] * X ** (r - c) * s ** c
            for e in range(3):
                C[:, c + e] += xc * self.poly[e]
        return C

    def integrate(self, lam, order: int = 0, chunk: int = 2048) -> np.ndarray:
        return self.integrate_orders(lam, (order,), chunk)[0]

    def integrate_orders(self, lam, orders=(0,), chunk: int = 2048) -> list[np.ndarray]:
        """I_r(lam) for each r in ``orders``, sharing the exponential table."""
        lam = np.asarray(lam, dtype=complex)
        flat = lam.reshape(-1)
        outs = [np.zeros(flat.shape, dtype=complex) for _ in orders]
        if self.is_zero:
            return [o.reshape(lam.shape) for o in outs]
        mats = [self._panel_matrix(r) for r in orders]
        top = max(orders) + 2
        s = self.width
        for lo in range(0, flat.size, chunk):
            lm = flat[lo:lo + chunk]
            J = unit_moments(lm * s, top)
            E = np.exp(1j * np.outer(lm, self.starts))
            for out, C in zip(outs, mats):
                out[lo:lo + chunk] = ((E @ C) * J[:, :C.shape[1]]).sum(axis=1)
        return [(out * s * (1j) ** r).reshape(lam.shape) for out, r in zip(outs, orders)]


def interval_power_exp(theta, nu: int, lo: float, hi: float) -> np.ndarray:
    """int_lo^hi x^nu exp(i theta x) dx in closed form."""
    theta = np.asarray(theta, dtype=complex)
    L = hi - lo
    J = unit_moments(theta * L, nu)
    total = np.zeros(theta.shape, dtype=complex)
    for c, cb in enumerate(_binom_row(nu)):
        total = total + cb * lo ** (nu - c) * L ** c * J[..., c]
    return L * np.exp(1j * theta * lo) * total
