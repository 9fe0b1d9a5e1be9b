"""Randomized probes of the Lipschitz stability of the full-spectra reconstruction.

Spectra pairs are drawn inside the ball ||lambda_{n,j} - lattice_n||_2 <= r,
perturbed, and both are pushed through the reconstruction.  The ratio

    (||q - q~|| + ||p - p~||) / (||lambda_1 - lambda~_1|| + ||lambda_2 - lambda~_2||)

is recorded per trial; its maximum is an empirical lower bound for the
stability constant of the ball, never a certified one.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import DelayConfig, PotentialPair, Spectrum, l2_sequence_distance, lattice, potential_distance
from .inverse import reconstruct_from_spectra

log = logging.getLogger(__name__)

GENERATOR = "numpy.random.Philox"
KINDS = ("generic", "common", "double")
MIN_N = 256


def thread_count() -> int:
    """Worker threads, capped by DIRAC_DELAY_THREADS."""
    env = os.environ.get("DIRAC_DELAY_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer DIRAC_DELAY_THREADS=%r", env)
    return min(4, os.cpu_count() or 1)


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per (seed, trial); seed + index alone would let runs
    with neighbouring seeds share almost all of their trials."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, index))))


def decaying_direction(rng: np.random.Generator, N: int) -> np.ndarray:
    """z_n / (1 + |n|) with complex Gaussian z_n, normalized to unit l2 norm."""
    n = np.arange(-N, N + 1)
    z = rng.standard_normal(n.size) + 1j * rng.standard_normal(n.size)
    d = z / (1 + np.abs(n))
    return d / np.linalg.norm(d)


@dataclass
class StabilityTrial:
    index: int
    kind: str
    delta: float
    lhs: float
    rhs_distance: float
    ratio: float
    excluded: bool = False
    reason: str = ""


@dataclass
class StabilityReport:
    r: float
    N: int
    M: int
    a: float
    seed: int
    trials: int
    excluded: int
    max_ratio: float
    p50: float
    p99: float
    loglog_slope: float
    generator: str = GENERATOR
    kinds: dict = field(default_factory=dict)
    note: str = ("empirical max ratio over a truncated ball |n| <= N; "
                 "not a certified stability constant")
    per_trial: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("per_trial")
        # statistics of an empty trial set are undefined; JSON has no NaN
        return {k: None if isinstance(v, float) and not math.isfinite(v) else v
                for k, v in d.items()}

    def csv_rows(self) -> list[str]:
        rows = ["index,kind,delta,rhs,lhs,ratio,excluded"]
        for t in self.per_trial:
            rows.append(f"{t.index},{t.kind},{t.delta!r},{t.rhs_distance!r},{t.lhs!r},"
                        f"{t.ratio!r},{int(t.excluded)}")
        return rows


def _draw_pair(rng, N: int, r: float, delta: float, kind: str):
    """Base and perturbed remainders (kappa_1, kappa_2) inside the r-ball."""
    fixed = [np.zeros(2 * N + 1, complex), np.zeros(2 * N + 1, complex)]
    pinned = [np.zeros(2 * N + 1, bool), np.zeros(2 * N + 1, bool)]
    if kind == "common":
        # lambda_{0,1} = lambda_{1,2} = c
        c = 0.25 + 0.05 * (rng.random() - 0.5)
        fixed[0][N], fixed[1][N + 1] = c, c - 0.5
        pinned[0][N] = pinned[1][N + 1] = True
    elif kind == "double":
        # lambda_{0,1} = lambda_{1,1} = c, a double eigenvalue of the first problem
        c = 0.5 + 0.05 * (rng.random() - 0.5)
        fixed[0][N], fixed[0][N + 1] = c, c - 1
        pinned[0][N] = pinned[0][N + 1] = True

    shift = delta * (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2) / 4
    base, pert = [], []
    for j in range(2):
        used = float(np.linalg.norm(fixed[j]))
        budget = r - delta - used - (abs(shift) * math.sqrt(2) if pinned[j].any() else 0.0)
        if budget <= 0:
            raise ValueError(f"kind {kind!r} does not fit in a ball of radius {r}")
        d = decaying_direction(rng, N)
        d[pinned[j]] = 0
        kappa = fixed[j] + budget * rng.uniform(0.2, 1.0) * d / np.linalg.norm(d)
        e = decaying_direction(rng, N)
        e[pinned[j]] = 0
        step = delta * e / np.linalg.norm(e) if delta > 0 else np.zeros_like(e)
        # pinned entries move together so shared/multiple values survive the perturbation
        step[pinned[j]] = shift if delta > 0 else 0
        if pinned[j].any() and delta > 0:
            step[~pinned[j]] *= math.sqrt(max(delta ** 2 - np.sum(pinned[j]) * abs(shift) ** 2, 0)) / delta
        base.append(kappa)
        pert.append(kappa + step)
    return base, pert


def _spectra(kappas, kind: str = "generic") -> tuple[Spectrum, Spectrum]:
    N = (kappas[0].size - 1) // 2
    v1, v2 = lattice(1, N) + kappas[0], lattice(2, N) + kappas[1]
    # adding the lattice back rounds differently per entry; restore exact equality
    if kind == "common":
        v2[N + 1] = v1[N]
    elif kind == "double":
        v1[N + 1] = v1[N]
    return Spectrum(1, v1), Spectrum(2, v2)


def run_trial(cfg: DelayConfig, r: float, N: int, M: int, seed: int, index: int,
              delta_range=None, kind: str | None = None) -> StabilityTrial:
    rng = trial_rng(seed, index)
    lo, hi = delta_range if delta_range is not None else (1e-6, r / 2)
    if hi <= 0:
        delta = 0.0
    else:
        delta = float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
    kind = kind or trial_kind(index)
    try:
        base, pert = _draw_pair(rng, N, r, delta, kind)
    except ValueError:
        kind = "generic"
        base, pert = _draw_pair(rng, N, r, delta, kind)
    s, t = _spectra(base, kind), _spectra(pert, kind)
    rhs = l2_sequence_distance(s[0], t[0]) + l2_sequence_distance(s[1], t[1])
    if rhs == 0:
        return StabilityTrial(index, kind, delta, 0.0, 0.0, math.nan, True, "identical spectra")
    try:
        x = reconstruct_from_spectra(s[0], s[1], cfg, M).potential
        y = reconstruct_from_spectra(t[0], t[1], cfg, M).potential
    except Exception as exc:  # noqa: BLE001 - any failure excludes the trial
        log.warning("trial %d failed: %s", index, exc)
        return StabilityTrial(index, kind, delta, math.nan, rhs, math.nan, True, str(exc))
    lhs = potential_distance(x, y)
    return StabilityTrial(index, kind, delta, lhs, rhs, lhs / rhs)


def trial_kind(index: int) -> str:
    """Every tenth trial (offset 3) forces a common eigenvalue, offset 7 a double one."""
    return {3: "common", 7: "double"}.get(index % 10, "generic")


def loglog_slope(rhs: np.ndarray, lhs: np.ndarray) -> float:
    if rhs.size < 2:
        return math.nan
    return float(np.polyfit(np.log(rhs), np.log(lhs), 1)[0])


def run_stability_trials(cfg: DelayConfig, r: float, trials: int, N: int, seed: int,
                         M: int = 512, delta_range=None, threads: int | None = None) -> StabilityReport:
    if r <= 0:
        raise ValueError("ball radius r must be positive")
    if trials < 1:
        raise ValueError("need at least one trial")
    if N < MIN_N:
        raise ValueError(f"N={N} is below the minimum half-width {MIN_N}")
    workers = threads or thread_count()

    def one(i):
        return run_trial(cfg, r, N, M, seed, i, delta_range)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(trials)))
    else:
        results = [one(i) for i in range(trials)]

    ok = [t for t in results if not t.excluded]
    ratios = np.array([t.ratio for t in ok])
    lhs = np.array([t.lhs for t in ok])
    rhs = np.array([t.rhs_distance for t in ok])
    kinds = {k: sum(t.kind == k for t in ok) for k in KINDS}
    stat = (lambda f: float(f(ratios))) if ratios.size else (lambda f: math.nan)
    return StabilityReport(
        r=r, N=N, M=M, a=cfg.a, seed=seed, trials=trials, excluded=len(results) - len(ok),
        max_ratio=stat(np.max), p50=stat(np.median), p99=stat(lambda x: np.percentile(x, 99)),
        loglog_slope=loglog_slope(rhs, lhs), kinds=kinds, per_trial=results)


def potential_side_ratios(cfg: DelayConfig, r: float, N: int, M: int, seed: int,
                          trials: int = 4) -> list[float]:
    """Converse direction: perturb smooth potentials, compare their forward spectra.

    Returns lhs/rhs ratios; potentials are random low-order cosine series
    scaled so that the drawn spectra stay well inside the r-ball.
    """
    from .forward import spectra_of

    out = []
    x = (np.arange(M + 1) / M)[None, :]
    k = np.arange(4)[:, None]
    basis = np.cos(np.pi * k * x) / (1 + k)
    for i in range(trials):
        rng = trial_rng(seed, 10_000 + i)
        cq, cp, dq, dp = (rng.standard_normal((4, 1)) + 1j * rng.standard_normal((4, 1)) for _ in range(4))
        scale = 0.3 * r
        eps = float(math.exp(rng.uniform(math.log(1e-4), math.log(1e-1))))
        q = scale * (cq * basis).sum(0) / 4
        p = scale * (cp * basis).sum(0) / 4
        base = PotentialPair(cfg.a, q, p)
        other = PotentialPair(cfg.a, q + eps * (dq * basis).sum(0), p + eps * (dp * basis).sum(0))
        s, t = spectra_of(base, N), spectra_of(other, N)
        rhs = l2_sequence_distance(s[0], t[0]) + l2_sequence_distance(s[1], t[1])
        out.append(potential_distance(base, other) / rhs)
    return out
