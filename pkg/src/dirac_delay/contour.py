"""Argument-principle zero counting and Delves-Lyness root extraction on circles."""

from __future__ import annotations

import numpy as np

MIN_POINTS = 256
MAX_POINTS = 1 << 14


class LocalizationError(RuntimeError):
    """Zeros could not be localized; ``index`` names the offending eigenvalue index."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


def _circle(center, radius, P):
    t = 2 * np.pi * np.arange(P) / P
    return center + radius * np.exp(1j * t)


def winding_number(f, center: complex, radius: float) -> int:
    """Number of zeros of the vectorized function f inside the circle.

    The phase increment is summed on P points, P doubled from 256 until the
    count agrees across two refinements.
    """
    counts = []
    P = MIN_POINTS
    while P <= MAX_POINTS:
        vals = f(_circle(center, radius, P))
        if np.any(vals == 0):
            raise LocalizationError(f"zero on the contour |z - {center}| = {radius}")
        dphi = np.angle(np.roll(vals, -1) / vals)
        counts.append(int(round(dphi.sum() / (2 * np.pi))))
        if len(counts) >= 3 and counts[-1] == counts[-2] == counts[-3]:
            return counts[-1]
        P *= 2
    raise LocalizationError(f"winding count did not stabilize around {center}")


def power_sums(f, df, center: complex, radius: float, kmax: int, P: int = 1024) -> np.ndarray:
    """s_k = (1 / 2 pi i) contour z^k f'/f dz, k = 0..kmax, relative to center.

    Trapezoid on the circle converges geometrically for analytic integrands;
    P is doubled until the sums agree to 1e-12.
    """
    prev = None
    while P <= MAX_POINTS:
        t = 2 * np.pi * np.arange(P) / P
        u = radius * np.exp(1j * t)
        z = center + u
        ratio = df(z) / f(z)
        # dz = i u dt, so (1/2 pi i) * sum(ratio * u^k * i u) * 2pi/P
        sums = np.array([np.mean(ratio * u ** (k + 1)) for k in range(kmax + 1)])
        if prev is not None and np.max(np.abs(sums - prev)) < 1e-12 * max(1.0, np.max(np.abs(sums))):
            return sums
        prev = sums
        P *= 2
    return prev


def roots_from_power_sums(s: np.ndarray, count: int) -> np.ndarray:
    """Roots of the monic polynomial whose power sums are s_1..s_count (Newton identities)."""
    if count == 0:
        return np.zeros(0, dtype=complex)
    e = np.zeros(count + 1, dtype=complex)
    e[0] = 1.0
    for k in range(1, count + 1):
        acc = 0j
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * s[i]
        e[k] = acc / k
    coeffs = [(-1) ** k * e[k] for k in range(count + 1)]
    return np.roots(coeffs).astype(complex)


def roots_in_disk(f, df, center: complex, radius: float, known=()) -> np.ndarray:
    """All zeros of f in the disk, excluding the already-known ones listed in ``known``.

    Known zeros are removed from the power sums before the polynomial is formed.
    """
    total = winding_number(f, center, radius)
    known = np.asarray([k for k in known if abs(k - center) < radius], dtype=complex)
    count = total - known.size
    if count < 0:
        raise LocalizationError("more known zeros than the winding count allows")
    if count == 0:
        return np.zeros(0, dtype=complex)
    s = power_sums(f, df, center, radius, count)
    for k in range(1, count + 1):
        s[k] -= np.sum((known - center) ** k)
    return center + roots_from_power_sums(s, count)
