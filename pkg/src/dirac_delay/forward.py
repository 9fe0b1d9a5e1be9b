"""Forward map: potentials -> kernels -> characteristic functions -> eigenvalues."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .contour import LocalizationError, roots_in_disk
from .core import (
    DEFAULT_MULT_TOL,
    DelayConfig,
    GeneralPotentialMatrix,
    InvalidInputError,
    KernelPair,
    PotentialPair,
    Spectrum,
    group_multiplicities,
    kernel_grid,
    lattice,
)
from .quadrature import PanelIntegrator

STRIP_HALF_WIDTH = 50.0
MAX_ORDER = 4
RESIDUAL_TOL = 1e-10
MAX_NEWTON = 50
TRUST_RADIUS = 0.49
CLUSTER_MULT_TOL = 1e-6
CLUSTER_DETECT = 1e-3
MULT_RESIDUAL = 1e-8

# free head of each problem (nu, j) and the sign/kind of its mean-value term
HEADS = {(1, 1): "-sin", (1, 2): "cos", (2, 1): "cos", (2, 2): "sin"}
V_TERMS = {(1, 1): (1, 1), (1, 2): (1, 2), (2, 1): (1, 2), (2, 2): (-1, 1)}


class DomainError(ValueError):
    """lambda outside the strip |Im lambda| <= 50 where evaluation is supported."""


def sinpi(z):
    """sin(pi z) with the integer part of Re z removed first."""
    z = np.asarray(z, dtype=complex)
    n = np.round(z.real)
    sign = 1.0 - 2.0 * (np.abs(n) % 2)
    return sign * np.sin(np.pi * (z - n))


def cospi(z):
    return sinpi(np.asarray(z, dtype=complex) + 0.5)


def _head_derivative(head: str, lam, order: int):
    # d^r sin(pi z) = pi^r sin(pi (z + r/2))
    scale = np.pi ** order
    if head == "sin":
        return scale * sinpi(lam + order / 2)
    if head == "-sin":
        return -scale * sinpi(lam + order / 2)
    if head == "cos":
        return scale * cospi(lam + order / 2)
    raise ValueError(head)


def potentials_to_kernels(pp: PotentialPair, cfg: DelayConfig | None = None) -> KernelPair:
    """w1, w2 at kernel node x_k; (pi+a-x_k)/2 is potential node M-k and (pi+a+x_k)/2 node k."""
    if cfg is not None and not math.isclose(cfg.a, pp.a, abs_tol=1e-14):
        raise InvalidInputError("potential grid does not match the delay configuration")
    q, p = pp.q, pp.p
    qr, pr = q[::-1], p[::-1]
    w1 = -0.25 * (qr + 1j * pr) - 0.25 * (q - 1j * p)
    w2 = 0.25 * (1j * qr - pr) - 0.25 * (1j * q + p)
    return KernelPair(pp.a, w1, w2)


@dataclass(frozen=True)
class CharFunctionKernelRep:
    """Delta(lam) = head(lam) + v_sign * V(lam) + int kernel(x) exp(i lam x) dx."""

    nu: int
    j: int
    a: float
    kernel: np.ndarray
    omega: tuple[complex, complex] = (0j, 0j)
    head: str = field(init=False)

    def __post_init__(self):
        if (self.nu, self.j) not in HEADS:
            raise InvalidInputError("nu and j must be 1 or 2")
        k = np.array(self.kernel, dtype=complex)
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "head", HEADS[(self.nu, self.j)])

    @property
    def b(self) -> float:
        return math.pi - self.a

    @property
    def M(self) -> int:
        return self.kernel.size - 1

    @cached_property
    def _integrator(self) -> PanelIntegrator:
        return PanelIntegrator(kernel_grid(self.a, self.M), self.kernel)

    def _v_term(self, lam, order: int):
        w1, w2 = self.omega
        if w1 == 0 and w2 == 0:
            return 0.0
        sign, kind = V_TERMS[(self.nu, self.j)]
        b = self.b
        ph = lam * b + order * np.pi / 2
        c, s = np.cos(ph), np.sin(ph)
        v = w1 * c + w2 * s if kind == 1 else w1 * s - w2 * c
        return sign * b ** order * v

    def evaluate(self, lam, orders=(0,)) -> list[np.ndarray]:
        lam = np.asarray(lam, dtype=complex)
        if np.any(np.abs(lam.imag) > STRIP_HALF_WIDTH):
            raise DomainError(f"|Im lambda| must not exceed {STRIP_HALF_WIDTH}")
        if max(orders) > MAX_ORDER:
            raise ValueError(f"derivative order above {MAX_ORDER} is unsupported")
        ints = self._integrator.integrate_orders(lam, tuple(orders))
        return [_head_derivative(self.head, lam, r) + self._v_term(lam, r) + I
                for r, I in zip(orders, ints)]

    def lattice(self, N: int) -> np.ndarray:
        return lattice(self.j, N, self.nu)


def kernels_to_char(kp: KernelPair, j: int) -> CharFunctionKernelRep:
    if j not in (1, 2):
        raise InvalidInputError("j must be 1 or 2")
    return CharFunctionKernelRep(1, j, kp.a, kp.w1 if j == 1 else kp.w2)


def eval_char(rep: CharFunctionKernelRep, lam):
    out = rep.evaluate(lam, (0,))[0]
    return out if out.ndim else complex(out)


def eval_char_derivative(rep: CharFunctionKernelRep, lam, order: int = 1):
    if order > MAX_ORDER or order < 0:
        raise ValueError(f"derivative order must be in 0..{MAX_ORDER}")
    out = rep.evaluate(lam, (order,))[0]
    return out if out.ndim else complex(out)


def _simpson(values: np.ndarray, h: float) -> complex:
    w = np.ones(values.size)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    return complex(h / 3 * (w @ values))


def general_char_functions(gm: GeneralPotentialMatrix, cfg: DelayConfig | None,
                           nu: int, j: int) -> CharFunctionKernelRep:
    """Characteristic function of B_{nu,j} for an arbitrary potential matrix.

    The cos/sin integrals against p11 - p22 and p12 + p21 are folded into one
    exponential kernel using the even and odd parts of each function.
    """
    if cfg is not None and not math.isclose(cfg.a, gm.a, abs_tol=1e-14):
        raise InvalidInputError("matrix grid does not match the delay configuration")
    if (nu, j) not in HEADS:
        raise InvalidInputError("nu and j must be 1 or 2")
    h = (math.pi - gm.a) / gm.M
    omega1 = 0.5 * _simpson(gm.q11 + gm.q22, h)
    omega2 = 0.5 * _simpson(gm.q12 - gm.q21, h)
    # p_{nu j}(x_k) = q_{nu j}((pi + a - x_k)/2) / 4 = q_{nu j}[M - k] / 4
    D = 0.25 * (gm.q11 - gm.q22)[::-1]
    S = 0.25 * (gm.q12 + gm.q21)[::-1]
    Dm, Sm = D[::-1], S[::-1]
    cos_D, sin_D = (D + Dm) / 2, (D - Dm) / 2j
    cos_S, sin_S = (S + Sm) / 2, (S - Sm) / 2j
    if (nu, j) in ((1, 1), (2, 2)):
        kernel = -cos_D + sin_S
    elif (nu, j) == (1, 2):
        kernel = -sin_D - cos_S
    else:
        kernel = sin_D + cos_S
    return CharFunctionKernelRep(nu, j, gm.a, kernel, (omega1, omega2))


@dataclass
class _NewtonResult:
    z: np.ndarray
    residual: np.ndarray
    converged: np.ndarray


def _newton(rep: CharFunctionKernelRep, z0: np.ndarray, residual_tol: float,
            max_iter: int = MAX_NEWTON) -> _NewtonResult:
    z = np.array(z0, dtype=complex)
    f, df = rep.evaluate(z, (0, 1))
    active = np.ones(z.size, bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f[idx] / df[idx]
        bad = ~np.isfinite(step)
        step[bad] = 0
        active[idx[bad]] = False
        znew = z[idx] - step
        fnew, dfnew = rep.evaluate(znew, (0, 1))
        # halve the step while the residual grows
        for _ in range(6):
            over = np.abs(fnew) > np.abs(f[idx]) * (1 + 1e-12)
            over &= np.abs(f[idx]) > residual_tol * 1e-4
            if not np.any(over):
                break
            step[over] *= 0.5
            znew[over] = z[idx][over] - step[over]
            fo, dfo = rep.evaluate(znew[over], (0, 1))
            fnew[over], dfnew[over] = fo, dfo
        z[idx], f[idx], df[idx] = znew, fnew, dfnew
        tiny = np.abs(step) <= 4e-16 * (1 + np.abs(znew))
        done = tiny | (np.abs(fnew) < residual_tol * 1e-4)
        active[idx[done]] = False
    res = np.abs(f)
    return _NewtonResult(z, res, np.isfinite(res) & (res <= residual_tol))


def _clusters(flags: np.ndarray) -> list[tuple[int, int]]:
    out, i = [], 0
    while i < flags.size:
        if flags[i]:
            k = i
            while k + 1 < flags.size and flags[k + 1]:
                k += 1
            out.append((i, k))
            i = k + 1
        else:
            i += 1
    return out


def _split_close(roots: np.ndarray, tol: float) -> list[np.ndarray]:
    """Partition roots (sorted by real part) into chains of neighbours closer than tol."""
    parts, cur = [], [roots[0]]
    for z in roots[1:]:
        if min(abs(z - u) for u in cur) < tol:
            cur.append(z)
        else:
            parts.append(np.array(cur))
            cur = [z]
    parts.append(np.array(cur))
    return parts


def _resolve_multiple(rep, f, df, roots: np.ndarray, residual_tol: float) -> list[tuple[complex, int]]:
    """Decide whether nearby roots are one multiple zero or distinct zeros.

    A k-fold zero perturbed by a residual r splits into k zeros about
    (r k!/|f^(k)|)^(1/k) apart, so distance alone cannot decide.  The cluster is
    reported as one k-fold eigenvalue when f^(nu)(c) at the centroid c is below
    MULT_RESIDUAL^((k - nu)/k) * pi^nu for every nu < k.
    """
    k = roots.size
    center = complex(np.mean(roots))
    radius = max(20 * float(np.max(np.abs(roots - center))), 1e-4)
    try:
        fine = roots_in_disk(f, df, center, radius)
    except LocalizationError:
        fine = np.zeros(0)
    if fine.size != k:
        fine = roots
    centroid = complex(np.mean(fine))
    if k - 1 <= MAX_ORDER:
        derivs = rep.evaluate(np.array([centroid]), tuple(range(k)))
        small = all(abs(d[0]) <= MULT_RESIDUAL ** ((k - nu) / k) * np.pi ** nu
                    for nu, d in enumerate(derivs))
    else:
        small = np.max(np.abs(fine - centroid)) < CLUSTER_MULT_TOL
    if small:
        return [(centroid, k)]
    polished = _newton(rep, fine, residual_tol).z
    return [(complex(z), 1) for z in polished]


def _cluster_roots(rep, f, df, found: np.ndarray, residual_tol: float) -> np.ndarray:
    order = np.lexsort((found.imag, found.real))
    found = found[order]
    out = []
    for part in _split_close(found, CLUSTER_DETECT):
        if part.size == 1:
            out.append(complex(_newton(rep, part, residual_tol).z[0]))
            continue
        for v, mult in _resolve_multiple(rep, f, df, part, residual_tol):
            out += [v] * mult
    out = np.array(out)
    return out[np.lexsort((out.imag, out.real))]


def find_eigenvalues(rep: CharFunctionKernelRep, N: int, residual_tol: float = RESIDUAL_TOL,
                     mult_tol: float = DEFAULT_MULT_TOL) -> Spectrum:
    """Zeros lambda_n, n = -N..N, of the characteristic function.

    Newton runs from every lattice point at once.  Indices whose iteration
    stalls, or whose root lies within ``CLUSTER_DETECT`` of a neighbour's, are
    resolved together by contour integration on a disk covering their lattice
    points: the zeros there come from power sums, and zeros that coincide to
    ``CLUSTER_MULT_TOL`` are reported as neighbouring equal entries.
    ``mult_tol`` groups the multiplicities listed in the metadata.
    """
    if N < 0:
        raise InvalidInputError("N must be non-negative")
    starts = rep.lattice(N).astype(complex)
    nr = _newton(rep, starts, residual_tol)
    z = nr.z.copy()
    flags = ~nr.converged
    close = np.abs(np.diff(z)) < CLUSTER_DETECT
    flags[:-1] |= close
    flags[1:] |= close

    def f(x):
        return rep.evaluate(x, (0,))[0]

    def df(x):
        return rep.evaluate(x, (1,))[0]

    for lo, hi in _clusters(flags):
        for _grow in range(4):
            center = 0.5 * (starts[lo] + starts[hi])
            radius = 0.5 * (hi - lo) + 0.5
            near = [z[k] for k in range(max(lo - 3, 0), min(hi + 4, z.size))
                    if (k < lo or k > hi) and not flags[k]]
            try:
                found = roots_in_disk(f, df, center, radius, near)
            except LocalizationError:
                found = None
            if found is not None and found.size == hi - lo + 1:
                break
            lo, hi = max(lo - 1, 0), min(hi + 1, z.size - 1)
        else:
            raise LocalizationError(
                f"could not localize eigenvalue n={lo - N}", index=int(lo - N))
        z[lo:hi + 1] = _cluster_roots(rep, f, df, found, residual_tol)
        flags[lo:hi + 1] = False

    residual = np.abs(f(z))
    groups = group_multiplicities(z, mult_tol)
    multiple = [(v, m) for v, m in groups if m > 1]
    bad = np.flatnonzero(residual > residual_tol)
    for k in bad:
        # a k-fold zero is only pinned down to ~eps^(1/k); accept it when it is confirmed multiple
        if not any(abs(z[k] - v) <= mult_tol for v, _ in multiple):
            raise LocalizationError(f"eigenvalue n={k - N} failed the residual test", index=int(k - N))
    return Spectrum(rep.j, z, rep.nu, meta={
        "residual": residual, "residual_tol": residual_tol, "trust_radius": TRUST_RADIUS,
        "outside_trust": int(np.sum(np.abs(z - starts) > TRUST_RADIUS)),
        "multiple": multiple})


def spectra_of(pp: PotentialPair, N: int, residual_tol: float = RESIDUAL_TOL) -> tuple[Spectrum, Spectrum]:
    """Convenience: spectra of B_{1,1} and B_{1,2} for the pair (q, p)."""
    kp = potentials_to_kernels(pp)
    return (find_eigenvalues(kernels_to_char(kp, 1), N, residual_tol),
            find_eigenvalues(kernels_to_char(kp, 2), N, residual_tol))
