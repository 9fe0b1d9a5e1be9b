"""Command-line front end: forward | reconstruct | subspectra | stability | roundtrip.

stdout carries one JSON summary per run; diagnostics go to stderr.  Values
resolve as command-line flag, then JSON config file, then built-in default.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import numbers
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .contour import LocalizationError
from .core import (DEFAULT_M, DelayConfig, InvalidInputError, PotentialPair, Spectrum,
                   l2_sequence_distance, potential_distance, read_json, write_json)
from .forward import RESIDUAL_TOL, eval_char, kernels_to_char, potentials_to_kernels, spectra_of
from .inverse import (IllConditionedBasisError, SubspectrumSpec, reconstruct_from_m_subspectra,
                      reconstruct_from_spectra)
from .stability import potential_side_ratios, run_stability_trials

log = logging.getLogger("dirac_delay")

EXIT_OK, EXIT_FAILURE, EXIT_INVALID, EXIT_LOCALIZATION, EXIT_ILL_CONDITIONED = 0, 1, 2, 3, 4
COMMANDS = ("forward", "reconstruct", "subspectra", "stability", "roundtrip")


@dataclass
class RunConfig:
    command: str
    a: float = math.pi / 2
    M: int = DEFAULT_M
    N: int = 64
    K: int = 64
    seed: int = 0
    trials: int = 200
    r: float = 1.0
    tol_residual: float = RESIDUAL_TOL
    delta_min: float = 1e-6
    delta_max: float | None = None
    crosscheck: int = 0
    out: str = "."
    potential: str | None = None
    spectrum1: str | None = None
    spectrum2: str | None = None
    sub1: str | None = None
    sub2: str | None = None
    plots: bool = True
    explicit: set = field(default_factory=set, repr=False)

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise InvalidInputError(f"unknown command {self.command!r}")
        DelayConfig(self.a)
        if self.M < 2 or self.M % 2:
            raise InvalidInputError(f"M={self.M} must be an even integer >= 2")
        if self.N < 1 or self.K < 1:
            raise InvalidInputError("N and K must be positive")
        if self.trials < 1 or self.r <= 0 or self.tol_residual <= 0:
            raise InvalidInputError("trials, r and tol-residual must be positive")
        required = {"forward": ("potential",), "roundtrip": ("potential",),
                    "reconstruct": ("spectrum1", "spectrum2"), "subspectra": ("sub1", "sub2")}
        for name in required.get(self.command, ()):
            path = getattr(self, name)
            if path is None:
                raise InvalidInputError(f"--{name} is required for {self.command}")
            if not Path(path).is_file():
                raise InvalidInputError(f"input file {path} does not exist")
        return self


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dirac-delay", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON file with option values")
    common.add_argument("--out", metavar="DIR", help="output directory (created if missing)")
    common.add_argument("--a", type=float, help="delay, pi/2 <= a < pi")
    common.add_argument("--M", type=int, help="potential grid intervals (even)")
    common.add_argument("--no-plots", dest="plots", action="store_const", const=False,
                        help="skip PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("forward", parents=[common], help="potentials -> eigenvalues")
    p.add_argument("--potential", metavar="FILE")
    p.add_argument("--N", type=int)
    p.add_argument("--tol-residual", type=float)

    p = sub.add_parser("reconstruct", parents=[common], help="full spectra -> potentials")
    p.add_argument("--spectrum1", metavar="FILE", help="spectrum of problem j=1")
    p.add_argument("--spectrum2", metavar="FILE", help="spectrum of problem j=2")

    p = sub.add_parser("subspectra", parents=[common], help="m-th subspectra -> potentials")
    p.add_argument("--sub1", metavar="FILE")
    p.add_argument("--sub2", metavar="FILE")
    p.add_argument("--K", type=int, help="accepted for symmetry; K is read from the files")

    p = sub.add_parser("stability", parents=[common], help="randomized stability trials")
    p.add_argument("--N", type=int)
    p.add_argument("--r", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--delta-min", type=float)
    p.add_argument("--delta-max", type=float, help="0 disables the perturbation")
    p.add_argument("--crosscheck", type=int, help="potential-side trials to add")

    p = sub.add_parser("roundtrip", parents=[common], help="forward -> reconstruct -> forward")
    p.add_argument("--potential", metavar="FILE")
    p.add_argument("--N", type=int)
    p.add_argument("--tol-residual", type=float)
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    """Merge flags over the optional config file over defaults."""
    known = {f.name for f in fields(RunConfig)} - {"command", "explicit"}
    values: dict = {}
    if getattr(ns, "config", None):
        data = read_json(ns.config)
        if not isinstance(data, dict):
            raise InvalidInputError("config file must hold a JSON object")
        for k, v in data.items():
            key = k.replace("-", "_")
            if key not in known:
                raise InvalidInputError(f"unknown config key {k!r}")
            values[key] = v
    for k, v in vars(ns).items():
        if k in known and v is not None:
            values[k] = v
    try:
        cfg = RunConfig(ns.command, **values)
    except TypeError as exc:
        raise InvalidInputError(str(exc)) from exc
    cfg.explicit = set(values)
    return cfg.validate()


def _csv(path: Path, header: str, rows) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(x) if isinstance(x, (numbers.Integral, str)) else repr(float(x))
                              for x in row) + "\n")
    return path


def _potential_csv(path: Path, pp: PotentialPair) -> Path:
    return _csv(path, "x,q_re,q_im,p_re,p_im",
                zip(pp.grid, pp.q.real, pp.q.imag, pp.p.real, pp.p.imag))


def _load_potential(cfg: RunConfig) -> PotentialPair:
    pp = PotentialPair.from_json(read_json(cfg.potential))
    if "a" in cfg.explicit and not math.isclose(pp.a, cfg.a, abs_tol=1e-12):
        raise InvalidInputError(f"--a={cfg.a} disagrees with a={pp.a} in {cfg.potential}")
    return pp


def _forward_outputs(cfg: RunConfig, pp: PotentialPair, out: Path, prefix: str = "") -> tuple:
    s1, s2 = spectra_of(pp, cfg.N, cfg.tol_residual)
    files = [write_json(out / f"{prefix}spectrum_j1.json", s1.to_json()),
             write_json(out / f"{prefix}spectrum_j2.json", s2.to_json())]
    rows = [(s.problem_j, n, v.real, v.imag, res)
            for s in (s1, s2) for n, v, res in zip(s.indices, s.values, s.meta["residual"])]
    files.append(_csv(out / f"{prefix}eigenvalues.csv", "j,n,re,im,residual", rows))
    kp = potentials_to_kernels(pp)
    span = min(cfg.N, 20) + 0.5
    lam = np.linspace(-span, span, 2001)
    mods = {f"|Delta_{j}|": np.abs(eval_char(kernels_to_char(kp, j), lam)) for j in (1, 2)}
    files.append(_csv(out / f"{prefix}char_modulus.csv", "lambda,abs_delta1,abs_delta2",
                      zip(lam, *mods.values())))
    if cfg.plots:
        from .plots import plot_char_modulus, plot_spectra
        files.append(plot_char_modulus(out / f"{prefix}char_modulus.png", lam, mods, (s1, s2)))
        files.append(plot_spectra(out / f"{prefix}spectra.png", (s1, s2)))
    return s1, s2, files


def cmd_forward(cfg: RunConfig, out: Path) -> dict:
    pp = _load_potential(cfg)
    s1, s2, files = _forward_outputs(cfg, pp, out)
    return {"a": pp.a, "M": pp.M, "N": cfg.N,
            "max_residual": max(float(s.meta["residual"].max()) for s in (s1, s2)),
            "multiple": {f"j{s.problem_j}": [[v.real, v.imag, m] for v, m in s.meta["multiple"]]
                         for s in (s1, s2)},
            "files": [p.name for p in files]}


def _reconstruction_outputs(cfg: RunConfig, rec, out: Path, reference=None) -> list:
    files = [write_json(out / "potential.json", rec.potential.to_json()),
             write_json(out / "diagnostics.json", rec.diagnostics()),
             _potential_csv(out / "potential.csv", rec.potential)]
    kp = rec.kernels
    files.append(_csv(out / "kernels.csv", "x,w1_re,w1_im,w2_re,w2_im",
                      zip(kp.grid, kp.w1.real, kp.w1.imag, kp.w2.real, kp.w2.imag)))
    if cfg.plots:
        from .plots import plot_potentials
        files.append(plot_potentials(out / "potential.png", rec.potential, reference))
    return files


def cmd_reconstruct(cfg: RunConfig, out: Path) -> dict:
    s1 = Spectrum.from_json(read_json(cfg.spectrum1))
    s2 = Spectrum.from_json(read_json(cfg.spectrum2))
    rec = reconstruct_from_spectra(s1, s2, DelayConfig(cfg.a), cfg.M)
    if rec.warning:
        log.warning(rec.warning)
    files = _reconstruction_outputs(cfg, rec, out)
    return {"a": cfg.a, "M": cfg.M, "N": s1.N, **rec.diagnostics(),
            "files": [p.name for p in files]}


def cmd_subspectra(cfg: RunConfig, out: Path) -> dict:
    data = [read_json(cfg.sub1), read_json(cfg.sub2)]
    if "a" in cfg.explicit:
        for d in data:
            d.setdefault("a", cfg.a)
    specs = [SubspectrumSpec.from_json(d) for d in data]
    rec = reconstruct_from_m_subspectra(specs[0], specs[1], cfg.M)
    files = _reconstruction_outputs(cfg, rec, out)
    return {"a": specs[0].cfg.a, "m": specs[0].m, "K": specs[0].K, "M": cfg.M,
            **rec.diagnostics(), "files": [p.name for p in files]}


def cmd_stability(cfg: RunConfig, out: Path) -> dict:
    dcfg = DelayConfig(cfg.a)
    hi = cfg.r / 2 if cfg.delta_max is None else cfg.delta_max
    report = run_stability_trials(dcfg, cfg.r, cfg.trials, cfg.N, cfg.seed, cfg.M,
                                  delta_range=(cfg.delta_min, hi))
    summary = report.to_json()
    if cfg.crosscheck:
        summary["potential_side_ratios"] = potential_side_ratios(
            dcfg, cfg.r, min(cfg.N, 256), cfg.M, cfg.seed, cfg.crosscheck)
    files = [write_json(out / "stability_report.json", summary)]
    path = out / "stability_trials.csv"
    path.write_text("\n".join(report.csv_rows()) + "\n", encoding="utf-8")
    files.append(path)
    if cfg.plots and report.trials > report.excluded:
        from .plots import plot_stability
        files.append(plot_stability(out / "stability.png", report))
    return {**summary, "files": [p.name for p in files]}


def cmd_roundtrip(cfg: RunConfig, out: Path) -> dict:
    pp = _load_potential(cfg)
    s1, s2, files = _forward_outputs(cfg, pp, out, prefix="input_")
    rec = reconstruct_from_spectra(s1, s2, pp.cfg, pp.M)
    files += _reconstruction_outputs(cfg, rec, out, reference=pp)
    t1, t2 = spectra_of(rec.potential, cfg.N, cfg.tol_residual)
    disc = l2_sequence_distance(s1, t1) + l2_sequence_distance(s2, t2)
    summary = {"a": pp.a, "M": pp.M, "N": cfg.N, "spectra_discrepancy": disc,
               "potential_distance": potential_distance(pp, rec.potential), **rec.diagnostics()}
    files.append(write_json(out / "roundtrip.json", summary))
    return {**summary, "files": [p.name for p in files]}


HANDLERS = {"forward": cmd_forward, "reconstruct": cmd_reconstruct, "subspectra": cmd_subspectra,
            "stability": cmd_stability, "roundtrip": cmd_roundtrip}


def _configure_logging(verbose: bool) -> None:
    # own handler on the package logger so diagnostics reach stderr even when
    # the host process has configured the root logger
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    log.setLevel(logging.INFO if verbose else logging.WARNING)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    _configure_logging(ns.verbose)
    try:
        cfg = resolve_config(ns)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        summary = HANDLERS[cfg.command](cfg, out)
    except LocalizationError as exc:
        log.error("localization failed: %s", exc)
        return EXIT_LOCALIZATION
    except IllConditionedBasisError as exc:
        log.error("%s", exc)
        return EXIT_ILL_CONDITIONED
    except (InvalidInputError, ValueError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort handler for the process exit code
        log.error("unexpected failure: %s", exc)
        return EXIT_FAILURE
    json.dump({"command": cfg.command, **summary}, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
