"""Reconstruction of (q, p) from complete spectra and from m-th subspectra."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_MULT_TOL,
    DelayConfig,
    InvalidInputError,
    KernelPair,
    PotentialPair,
    Spectrum,
    group_multiplicities,
    kernel_grid,
)
from .forward import cospi, sinpi
from .products import (
    DEFAULT_THRESHOLD,
    TAIL_BOUND,
    TypeReport,
    head_subtracted_samples,
    outside_energy_fraction,
    spectra_to_char,
)
from .quadrature import interval_power_exp

RIDGE = 1e-10
MAX_CONDITION = 1e8


class IllConditionedBasisError(RuntimeError):
    """The truncated moment system is too far from a Riesz basis to be solved."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


def kernels_to_potentials(kp: KernelPair, cfg: DelayConfig | None = None) -> PotentialPair:
    """q, p at potential node i from w at kernel nodes M - i and i (pi + a - 2x and 2x - pi - a)."""
    if cfg is not None and not math.isclose(cfg.a, kp.a, abs_tol=1e-14):
        raise InvalidInputError("kernel grid does not match the delay configuration")
    w1, w2 = kp.w1, kp.w2
    w1r, w2r = w1[::-1], w2[::-1]
    q = -(w1r + 1j * w2r) - (w1 - 1j * w2)
    p = (1j * w1r - w2r) - (1j * w1 + w2)
    return PotentialPair(kp.a, q, p)


def synthesize_kernel(samples: np.ndarray, a: float, M: int) -> np.ndarray:
    """w(x) = (1/2pi) sum_{|n|<=N} g_n exp(-inx) on the kernel grid (direct sum).

    At x = +-(pi - a) the series converges to the mean of the one-sided limits
    and w vanishes outside, so the endpoint samples are doubled.
    """
    g = np.asarray(samples, dtype=complex)
    N = (g.size - 1) // 2
    x = kernel_grid(a, M)
    n = np.arange(-N, N + 1)
    w = np.exp(-1j * np.outer(x, n)) @ g / (2 * np.pi)
    w[0] *= 2
    w[-1] *= 2
    return w


def synthesize_kernels(g1: np.ndarray, g2: np.ndarray, a: float, M: int) -> KernelPair:
    """Linear map from head-subtracted samples to the kernel pair."""
    return KernelPair(a, synthesize_kernel(g1, a, M), synthesize_kernel(g2, a, M))


@dataclass(frozen=True)
class Reconstruction:
    potential: PotentialPair
    kernels: KernelPair
    reports: tuple[TypeReport, ...] = ()
    condition: tuple[float, ...] = ()
    warning: str | None = None

    def diagnostics(self) -> dict:
        out: dict = {}
        if self.reports:
            out["type_reports"] = {f"j{j}": r.to_json() for j, r in zip((1, 2), self.reports)}
        if self.condition:
            out["gram_condition"] = {f"j{j}": c for j, c in zip((1, 2), self.condition)}
        out["warning"] = self.warning
        return out


def reconstruct_from_spectra(s1: Spectrum, s2: Spectrum, cfg: DelayConfig, M: int = 512,
                             threshold: float = DEFAULT_THRESHOLD) -> Reconstruction:
    """Recover (q, p) from the full spectra of B_{1,1} and B_{1,2}.

    The zeros define the characteristic functions through their canonical
    products; the head-subtracted values at the integers are the Fourier
    coefficients of w_j on (-pi, pi).  The synthesized kernels are sampled
    on [a - pi, pi - a]; the energy they carry outside it is reported.
    """
    if s1.problem_j != 1 or s2.problem_j != 2:
        raise InvalidInputError("expected spectra of problems j=1 and j=2")
    if s1.N != s2.N:
        raise InvalidInputError(f"half-widths differ: {s1.N} vs {s2.N}")
    g = [head_subtracted_samples(spectra_to_char(s)) for s in (s1, s2)]
    kp = synthesize_kernels(g[0], g[1], cfg.a, M)
    reports = tuple(
        TypeReport(f, threshold, f < threshold, s1.N)
        for f in (outside_energy_fraction(gj, cfg.b) for gj in g))
    warning = None
    if not all(r.passed for r in reports):
        worst = max(r.outside_energy_fraction for r in reports)
        warning = (f"synthesized kernels carry {worst:.3g} of their energy outside "
                   f"[a - pi, pi - a]; data may not be spectra of a problem with this delay")
    return Reconstruction(kernels_to_potentials(kp, cfg), kp, reports, warning=warning)


@dataclass(frozen=True)
class SubspectrumSpec:
    """mu_k, k = -K..K, of problem j with mu_k ~ m k + (1 - j)/2.

    ``mult[k]`` is the multiplicity of the group containing entry k; multiple
    values are stored as neighbouring equal entries.
    """

    problem_j: int
    m: int
    values: np.ndarray
    mult: np.ndarray = None
    cfg: DelayConfig = field(default=None)

    def __post_init__(self):
        if self.problem_j not in (1, 2):
            raise InvalidInputError("problem_j must be 1 or 2")
        if self.m < 2:
            raise InvalidInputError("m must be >= 2")
        v = np.array(self.values, dtype=complex)
        if v.ndim != 1 or v.size % 2 == 0 or not np.all(np.isfinite(v)):
            raise InvalidInputError("subspectrum must hold 2K+1 finite values")
        mult = np.ones(v.size, int) if self.mult is None else np.array(self.mult, dtype=int)
        if mult.shape != v.shape or np.any(mult < 1):
            raise InvalidInputError("mult must give a positive multiplicity per entry")
        cfg = self.cfg or DelayConfig.from_m(self.m)
        if not math.isclose(cfg.a, math.pi - math.pi / self.m, rel_tol=0, abs_tol=1e-12):
            raise InvalidInputError(f"delay a={cfg.a} differs from pi - pi/m for m={self.m}")
        k = 0
        while k < v.size:
            run = int(mult[k])
            if k + run > v.size or np.any(v[k:k + run] != v[k]) or np.any(mult[k:k + run] != run):
                raise InvalidInputError(f"entry {k - v.size // 2}: multiplicity {run} not matched "
                                        "by neighbouring equal values")
            if k + run < v.size and v[k + run] == v[k]:
                raise InvalidInputError("equal neighbouring values exceed their stated multiplicity")
            k += run
        kappa = v - self.lattice
        idx = np.arange(-(v.size // 2), v.size // 2 + 1)
        tail = np.abs(kappa[np.abs(idx) > v.size // 4])
        if tail.size and tail.max() >= TAIL_BOUND * self.m:
            raise InvalidInputError("subspectrum violates the asymptotic form")
        v.setflags(write=False)
        mult.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mult", mult)
        object.__setattr__(self, "cfg", cfg)

    @property
    def K(self) -> int:
        return self.values.size // 2

    @property
    def lattice(self) -> np.ndarray:
        K = self.values.size // 2
        return self.m * np.arange(-K, K + 1) + (1 - self.problem_j) / 2

    def groups(self) -> list[tuple[complex, int]]:
        out, k = [], 0
        while k < self.values.size:
            out.append((complex(self.values[k]), int(self.mult[k])))
            k += int(self.mult[k])
        return out

    @classmethod
    def from_spectrum(cls, s: Spectrum, m: int, K: int,
                      tol: float = DEFAULT_MULT_TOL) -> "SubspectrumSpec":
        """Take lambda_{mk}, |k| <= K, grouping near-equal neighbours by ``tol``."""
        if m * K > s.N:
            raise InvalidInputError(f"need N >= m K = {m * K}, spectrum has N = {s.N}")
        sub = np.array([s[m * k] for k in range(-K, K + 1)])
        groups = group_multiplicities(sub, tol)
        vals = np.array([v for v, c in groups for _ in range(c)])
        mult = np.array([c for _, c in groups for _ in range(c)])
        return cls(s.problem_j, m, vals, mult)

    def to_json(self) -> dict:
        return {"j": self.problem_j, "N": self.K, "m": self.m,
                "re": self.values.real.tolist(), "im": self.values.imag.tolist(),
                "mult": self.mult.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "SubspectrumSpec":
        try:
            vals = np.asarray(data["re"], float) + 1j * np.asarray(data["im"], float)
            j, K, m = int(data["j"]), int(data["N"]), int(data["m"])
            mult = data.get("mult")
            a = data.get("a")
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed subspectrum JSON: {exc}") from exc
        if vals.size != 2 * K + 1:
            raise InvalidInputError(f"expected 2N+1={2 * K + 1} values, got {vals.size}")
        cfg = DelayConfig(float(a)) if a is not None else None
        return cls(j, m, vals, mult, cfg)


def beta_coefficients(spec: SubspectrumSpec) -> np.ndarray:
    """f_j^{(nu)}(mu_k), nu < m_k, with f_1 = sin(pi z) and f_2 = -cos(pi z)."""
    out = []
    for mu, mk in spec.groups():
        for nu in range(mk):
            d = np.pi ** nu * (sinpi(mu + nu / 2) if spec.problem_j == 1 else -cospi(mu + nu / 2))
            out.append(complex(d))
    return np.array(out)


def basis_shift(j: int) -> float:
    """Frequency shift s making exp(i (m l + s) x) line up with mu_k ~ m k + (1 - j)/2."""
    return (j - 1) / 2


def gram_matrix(spec: SubspectrumSpec) -> np.ndarray:
    """G[n, l] = int_{-b}^{b} phi_l(x) (ix)^nu exp(i mu_k x) dx for the orthonormal
    basis phi_l = exp(i (m l + s) x)/sqrt(2b) of L2(-b, b), b = pi/m."""
    b = spec.cfg.b
    K = spec.K
    freq = spec.m * np.arange(-K, K + 1) + basis_shift(spec.problem_j)
    rows = []
    for mu, mk in spec.groups():
        for nu in range(mk):
            rows.append((1j) ** nu * interval_power_exp(freq + mu, nu, -b, b))
    return np.array(rows) / math.sqrt(2 * b)


def solve_moments(spec: SubspectrumSpec, M: int, ridge: float = RIDGE,
                  max_condition: float = MAX_CONDITION) -> tuple[np.ndarray, float]:
    """Kernel samples solving the truncated moment problem, plus the Gram condition number."""
    K = spec.K
    if np.all(spec.values == spec.lattice) and np.all(spec.mult == 1):
        return np.zeros(M + 1, dtype=complex), 1.0
    G = gram_matrix(spec)
    beta = beta_coefficients(spec)
    cond = float(np.linalg.cond(G))
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditionedBasisError(
            f"Gram matrix condition number {cond:.3g} exceeds {max_condition:.0e}", cond)
    n = G.shape[1]
    A = np.vstack([G, math.sqrt(ridge) * np.eye(n)])
    rhs = np.concatenate([beta, np.zeros(n)])
    c = np.linalg.lstsq(A, rhs, rcond=None)[0]
    x = kernel_grid(spec.cfg.a, M)
    l = np.arange(-K, K + 1)
    # periodic part first, endpoint-corrected, then the unimodular shift factor
    w = np.exp(1j * spec.m * np.outer(x, l)) @ c / math.sqrt(2 * spec.cfg.b)
    jump = boundary_jump(c, spec.m, spec.cfg.b)
    w[0] -= jump / 2
    w[-1] += jump / 2
    return w * np.exp(1j * basis_shift(spec.problem_j) * x), cond


def boundary_jump(c: np.ndarray, m: int, b: float, min_terms: int = 8) -> complex:
    """Estimate w(b) - w(-b) from the decay of the coefficients in exp(i m l x).

    The periodic extension of w jumps by J at x = +-b, so
    (-1)^l l c_l -> i J / (m sqrt(2b)) + O(1/l); the limit is fitted on
    K/4 <= |l| <= K.  The series itself converges to the midpoint there.
    """
    K = c.size // 2
    l = np.arange(-K, K + 1)
    sel = np.abs(l) >= max(K // 4, 1)
    if sel.sum() < min_terms:
        return 0j
    y = c[sel] * (-1.0) ** l[sel] * l[sel]
    A = np.column_stack([np.ones(sel.sum()), 1.0 / l[sel]])
    lead = np.linalg.lstsq(A, y, rcond=None)[0][0]
    return complex(lead * m * math.sqrt(2 * b) / 1j)


def reconstruct_from_m_subspectra(spec1: SubspectrumSpec, spec2: SubspectrumSpec, M: int = 512,
                                  ridge: float = RIDGE,
                                  max_condition: float = MAX_CONDITION) -> Reconstruction:
    """Recover (q, p) from m-th subspectra of B_{1,1} and B_{1,2} with a = pi - pi/m.

    Each kernel is expanded in exp(i m l x), |l| <= K, which is an orthogonal
    basis of L2(-pi/m, pi/m); the moment equations against the shifted
    exponentials (ix)^nu exp(i mu x) form a square system solved by ridge
    least squares.
    """
    if spec1.m != spec2.m:
        raise InvalidInputError(f"subspectra use different m: {spec1.m} vs {spec2.m}")
    if spec1.problem_j != 1 or spec2.problem_j != 2:
        raise InvalidInputError("expected subspectra of problems j=1 and j=2")
    cfg = spec1.cfg
    w1, c1 = solve_moments(spec1, M, ridge, max_condition)
    w2, c2 = solve_moments(spec2, M, ridge, max_condition)
    kp = KernelPair(cfg.a, w1, w2)
    return Reconstruction(kernels_to_potentials(kp, cfg), kp, condition=(c1, c2))
