"""Shared domain types, grids, norms and multiplicity bookkeeping.

Potentials live on a uniform grid over [a, pi]; kernels live on the mirrored
grid over [a - pi, pi - a] whose node x_k is mapped by (pi + a -/+ x)/2 onto
potential nodes M - k and k.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_M = 512
DEFAULT_MULT_TOL = 1e-8


class InvalidInputError(ValueError):
    """Raised when inputs violate a documented precondition."""


def _frozen(arr, dtype=complex):
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DelayConfig:
    a: float
    interval_end: float = math.pi

    def __post_init__(self):
        # tiny slack so that a = pi/2 written as 1.5707963267948966 passes
        if not (math.pi / 2 - 1e-12 <= self.a < math.pi):
            raise InvalidInputError(f"delay a={self.a!r} must satisfy pi/2 <= a < pi")

    @property
    def b(self) -> float:
        """Support half-width pi - a of the kernels."""
        return self.interval_end - self.a

    @classmethod
    def from_m(cls, m: int) -> "DelayConfig":
        """Delay a = pi - pi/m used by m-th subspectra."""
        if m < 2:
            raise InvalidInputError("m must be >= 2")
        return cls(math.pi - math.pi / m)


def potential_grid(a: float, M: int) -> np.ndarray:
    if M < 2 or M % 2:
        raise InvalidInputError(f"M={M} must be an even integer >= 2")
    return a + (math.pi - a) * np.arange(M + 1) / M


def kernel_grid(a: float, M: int) -> np.ndarray:
    """Nodes -b + 2 b k / M, k = 0..M, exactly antisymmetric about zero."""
    if M < 2 or M % 2:
        raise InvalidInputError(f"M={M} must be an even integer >= 2")
    b = math.pi - a
    half = b * np.arange(-M // 2, M // 2 + 1) / (M // 2)
    return half


@dataclass(frozen=True)
class PotentialPair:
    """Samples of q and p on the uniform grid over [a, pi]."""

    a: float
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = _frozen(self.q)
        p = _frozen(self.p)
        if q.ndim != 1 or q.shape != p.shape:
            raise InvalidInputError("q and p must be 1-D arrays of equal length")
        if q.size < 3:
            raise InvalidInputError("potential grid is empty")
        if (q.size - 1) % 2:
            raise InvalidInputError("number of intervals M must be even")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise InvalidInputError("potential samples must be finite")
        DelayConfig(self.a)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def M(self) -> int:
        return self.q.size - 1

    @property
    def cfg(self) -> DelayConfig:
        return DelayConfig(self.a)

    @property
    def grid(self) -> np.ndarray:
        return potential_grid(self.a, self.M)

    @property
    def h(self) -> float:
        return (math.pi - self.a) / self.M

    @classmethod
    def from_functions(cls, a: float, M: int, q, p) -> "PotentialPair":
        x = potential_grid(a, M)
        return cls(a, np.broadcast_to(q(x), x.shape), np.broadcast_to(p(x), x.shape))

    @classmethod
    def zeros(cls, a: float, M: int = DEFAULT_M) -> "PotentialPair":
        return cls(a, np.zeros(M + 1), np.zeros(M + 1))

    def to_json(self) -> dict:
        return {
            "a": self.a,
            "M": self.M,
            "q_re": self.q.real.tolist(),
            "q_im": self.q.imag.tolist(),
            "p_re": self.p.real.tolist(),
            "p_im": self.p.imag.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "PotentialPair":
        try:
            q = np.asarray(data["q_re"], float) + 1j * np.asarray(data["q_im"], float)
            p = np.asarray(data["p_re"], float) + 1j * np.asarray(data["p_im"], float)
            a, M = float(data["a"]), int(data["M"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed potential JSON: {exc}") from exc
        if q.size != M + 1:
            raise InvalidInputError(f"expected M+1={M + 1} samples, got {q.size}")
        return cls(a, q, p)


@dataclass(frozen=True)
class KernelPair:
    """Samples of w1, w2 on the kernel grid over [a - pi, pi - a]."""

    a: float
    w1: np.ndarray
    w2: np.ndarray

    def __post_init__(self):
        w1, w2 = _frozen(self.w1), _frozen(self.w2)
        if w1.ndim != 1 or w1.shape != w2.shape or (w1.size - 1) % 2 or w1.size < 3:
            raise InvalidInputError("kernel arrays must be 1-D with an odd length >= 3")
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "w2", w2)

    @property
    def M(self) -> int:
        return self.w1.size - 1

    @property
    def grid(self) -> np.ndarray:
        return kernel_grid(self.a, self.M)

    @property
    def b(self) -> float:
        return math.pi - self.a


@dataclass(frozen=True)
class GeneralPotentialMatrix:
    """Full 2x2 potential matrix sampled on the potential grid."""

    a: float
    q11: np.ndarray
    q12: np.ndarray
    q21: np.ndarray
    q22: np.ndarray

    def __post_init__(self):
        arrs = [_frozen(getattr(self, k)) for k in ("q11", "q12", "q21", "q22")]
        if len({x.shape for x in arrs}) != 1 or arrs[0].ndim != 1 or (arrs[0].size - 1) % 2:
            raise InvalidInputError("matrix entries must share one grid with even M")
        if not all(np.all(np.isfinite(x)) for x in arrs):
            raise InvalidInputError("matrix entries must be finite")
        for k, x in zip(("q11", "q12", "q21", "q22"), arrs):
            object.__setattr__(self, k, x)

    @property
    def M(self) -> int:
        return self.q11.size - 1

    @classmethod
    def from_pair(cls, pp: PotentialPair) -> "GeneralPotentialMatrix":
        """Embed (q, p) in the canonical form q11 = -q22 = q, q12 = q21 = p."""
        return cls(pp.a, pp.q, pp.p, pp.p, -pp.q)


def lattice_offset(j: int, nu: int = 1) -> float:
    """Shift of the free eigenvalue lattice: (1 - j)/2 for nu = 1, j/2 for nu = 2."""
    return (1 - j) / 2 if nu == 1 else j / 2


def lattice(j: int, N: int, nu: int = 1) -> np.ndarray:
    """Unperturbed eigenvalues n + offset for n = -N..N."""
    return np.arange(-N, N + 1) + lattice_offset(j, nu)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues lambda_n, n = -N..N, of problem j (multiple values neighbouring)."""

    problem_j: int
    values: np.ndarray
    nu: int = 1
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.problem_j not in (1, 2) or self.nu not in (1, 2):
            raise InvalidInputError("problem_j and nu must be 1 or 2")
        v = _frozen(self.values)
        if v.ndim != 1 or v.size % 2 == 0:
            raise InvalidInputError("spectrum must hold 2N+1 values")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("spectrum values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return (self.values.size - 1) // 2

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @property
    def remainders(self) -> np.ndarray:
        """kappa_n = lambda_n - n - (1 - j)/2."""
        return self.values - lattice(self.problem_j, self.N, self.nu)

    def __getitem__(self, n: int) -> complex:
        return complex(self.values[n + self.N])

    @classmethod
    def free(cls, j: int, N: int, nu: int = 1) -> "Spectrum":
        return cls(j, lattice(j, N, nu).astype(complex), nu)

    def to_json(self) -> dict:
        out = {"j": self.problem_j, "N": self.N,
               "re": self.values.real.tolist(), "im": self.values.imag.tolist()}
        if self.nu != 1:
            out["nu"] = self.nu
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Spectrum":
        try:
            vals = np.asarray(data["re"], float) + 1j * np.asarray(data["im"], float)
            j, N, nu = int(data["j"]), int(data["N"]), int(data.get("nu", 1))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed spectrum JSON: {exc}") from exc
        if vals.size != 2 * N + 1:
            raise InvalidInputError(f"expected 2N+1={2 * N + 1} values, got {vals.size}")
        return cls(j, vals, nu)


def trapezoid_l2(values: np.ndarray, h: float) -> float:
    v = np.abs(np.asarray(values)) ** 2
    if v.size < 2:
        raise InvalidInputError("need at least two samples for a norm")
    return math.sqrt(h * (v.sum() - 0.5 * (v[0] + v[-1])))


def l2_norm_potential(pp: PotentialPair, component: str = "sum") -> float:
    """Trapezoidal L2(a, pi) norm of q, of p, or ||q|| + ||p|| (default)."""
    if component == "q":
        return trapezoid_l2(pp.q, pp.h)
    if component == "p":
        return trapezoid_l2(pp.p, pp.h)
    if component == "sum":
        return trapezoid_l2(pp.q, pp.h) + trapezoid_l2(pp.p, pp.h)
    raise InvalidInputError(f"unknown component {component!r}")


def potential_distance(x: PotentialPair, y: PotentialPair) -> float:
    """||q - q~|| + ||p - p~|| on a shared grid."""
    if x.M != y.M or not math.isclose(x.a, y.a, abs_tol=1e-14):
        raise InvalidInputError("potentials live on different grids")
    return trapezoid_l2(x.q - y.q, x.h) + trapezoid_l2(x.p - y.p, x.h)


def l2_sequence_distance(s: Spectrum, t: Spectrum) -> float:
    if s.problem_j != t.problem_j or s.nu != t.nu or s.N != t.N:
        raise InvalidInputError("spectra must share problem index and half-width")
    return float(np.sqrt(np.sum(np.abs(s.values - t.values) ** 2)))


def group_multiplicities(values, tol: float = DEFAULT_MULT_TOL) -> list[tuple[complex, int]]:
    """Collapse runs of neighbouring near-equal values into (mean, multiplicity)."""
    groups: list[tuple[complex, int]] = []
    run: list[complex] = []
    for v in values:
        v = complex(v)
        if run and all(abs(v - u) <= tol for u in run):
            run.append(v)
            continue
        if run:
            groups.append((sum(run) / len(run), len(run)))
        run = [v]
    if run:
        groups.append((sum(run) / len(run), len(run)))
    return groups


def expand_groups(groups) -> np.ndarray:
    return np.array([v for v, m in groups for _ in range(m)], dtype=complex)


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read JSON from {path}: {exc}") from exc


def write_json(path, data) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path
