"""Characteristic functions rebuilt from their zeros, and the exponential-type diagnostic."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import matmul_toeplitz

from .core import DelayConfig, InvalidInputError, Spectrum
from .forward import cospi, sinpi

TAIL_BOUND = 0.5
DEFAULT_THRESHOLD = 1e-3
# samples with RMS below this are root-finding noise around an identically zero kernel
NOISE_RMS = 1e-9


@dataclass(frozen=True)
class CharFunctionProductRep:
    problem_j: int
    zeros: Spectrum

    @property
    def N(self) -> int:
        return self.zeros.N


@dataclass(frozen=True)
class TypeReport:
    outside_energy_fraction: float
    threshold: float
    passed: bool
    N: int

    def to_json(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def check_asymptotics(s: Spectrum, tail_bound: float = TAIL_BOUND) -> None:
    """Reject zero lists whose remainders do not decay.

    Only a finite section is available, so decay is judged on the outer half
    |n| > N/2, where every |lambda_n - lattice_n| must stay below ``tail_bound``.
    """
    kappa = s.remainders
    n = s.indices
    tail = np.abs(kappa[np.abs(n) > s.N / 2])
    if tail.size and tail.max() >= tail_bound:
        raise InvalidInputError(
            f"zeros violate the asymptotic form: max tail remainder {tail.max():.3g}")


def spectra_to_char(zeros: Spectrum) -> CharFunctionProductRep:
    if zeros.nu != 1:
        raise InvalidInputError("product representations are defined for problems B_{1,j}")
    check_asymptotics(zeros)
    return CharFunctionProductRep(zeros.problem_j, zeros)


def _merged_head(j: int, lam: np.ndarray, m: np.ndarray, inside: np.ndarray) -> np.ndarray:
    """head(lam) / (mu_m - lam) where inside, head(lam) elsewhere."""
    head = -sinpi(lam) if j == 1 else cospi(lam)
    mu = m + (0.0 if j == 1 else -0.5)
    t = lam - mu
    sign = 1.0 - 2.0 * (np.abs(m) % 2)
    # sin(pi t) / t without cancellation near t = 0
    pt = np.pi * t
    # both branches are evaluated; the unused one may overflow for subnormal t
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        sinc = np.where(np.abs(pt) < 1e-4, 1 - pt ** 2 / 6 + pt ** 4 / 120, np.sin(pt) / pt)
    merged = np.pi * sign * sinc * (1.0 if j == 1 else -1.0)
    return np.where(inside, merged, head)


def eval_product(rep: CharFunctionProductRep, lam, chunk: int = 512):
    """Delta_j(lam) = head_j(lam) * prod_{|n|<=N} (lambda_n - lam)/(mu_n - lam).

    The lattice factor nearest to lam is divided into the head analytically,
    so evaluation at lattice points is exact rather than 0/0.  Factors are
    multiplied in order of increasing |n|.
    """
    scalar = np.ndim(lam) == 0
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    j, N = rep.problem_j, rep.N
    off = 0.0 if j == 1 else -0.5
    order = np.argsort(np.abs(np.arange(-N, N + 1)), kind="stable")
    zeros = rep.zeros.values[order]
    mu = (np.arange(-N, N + 1) + off)[order]
    flat = lam.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    for lo in range(0, flat.size, chunk):
        L = flat[lo:lo + chunk]
        m = np.round(L.real - off)
        # merge only near a head zero; at half spacing the plain head is exact
        inside = (np.abs(m) <= N) & (np.abs(L - (m + off)) < 0.5)
        den = mu[None, :] - L[:, None]
        hit = (mu[None, :] == (m + off)[:, None]) & inside[:, None]
        den[hit] = 1.0
        # 1 + kappa_n/(mu_n - lam) is exactly 1 on unperturbed factors
        R = 1 + (zeros - mu)[None, :] / den
        R[hit] = (zeros[None, :] - L[:, None])[hit]
        out[lo:lo + chunk] = _merged_head(j, L, m, inside) * np.prod(R, axis=1)
    out = out.reshape(lam.shape)
    return complex(out[0]) if scalar else out


def head_subtracted_samples(rep: CharFunctionProductRep) -> np.ndarray:
    """g(n) = Delta_1(n) + sin(pi n) or Delta_2(n) - cos(pi n) at n = -N..N."""
    n = np.arange(-rep.N, rep.N + 1).astype(complex)
    d = eval_product(rep, n)
    return d + sinpi(n) if rep.problem_j == 1 else d - cospi(n)


def outside_energy_fraction(samples: np.ndarray, b: float) -> float:
    """Share of the L2(-pi, pi) energy of w(x) = (1/2pi) sum g_n exp(-inx) lying outside [-b, b].

    Inside energy is the Toeplitz form (1/4pi^2) g^H K g with
    K_{nm} = 2 sin((n - m) b)/(n - m), so no spatial grid is involved.
    Samples at the noise level of the root finder count as a zero kernel.
    """
    g = np.asarray(samples, dtype=complex)
    total = float(np.sum(np.abs(g) ** 2)) / (2 * np.pi)
    if total <= NOISE_RMS ** 2 * g.size / (2 * np.pi):
        return 0.0
    k = np.arange(g.size, dtype=float)
    col = np.empty(g.size)
    col[0] = 2 * b
    col[1:] = 2 * np.sin(k[1:] * b) / k[1:]
    inside = float(np.real(np.vdot(g, matmul_toeplitz(col, g)))) / (4 * np.pi ** 2)
    return min(1.0, max(0.0, 1.0 - inside / total))


def check_type_condition(rep: CharFunctionProductRep, cfg: DelayConfig,
                         threshold: float = DEFAULT_THRESHOLD) -> TypeReport:
    frac = outside_energy_fraction(head_subtracted_samples(rep), cfg.b)
    return TypeReport(frac, threshold, frac < threshold, rep.N)


def free_head(j: int, lam):
    lam = np.asarray(lam, dtype=complex)
    return -sinpi(lam) if j == 1 else cospi(lam)

