"""bubblekit command line: constants, vortex, predict, sweep, verify.

Exit codes: 0 success, 2 configuration error, 3 verification failure.
All numeric output is CSV with a header row and 17 significant digits.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .config import ConfigError, load_json
from .constants import DEFAULT_TOL, compute_constants

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 2, 3
COMMANDS = ("constants", "vortex", "predict", "sweep", "verify")
TOLERANCE_DEFAULTS = {"quadrature": DEFAULT_TOL, "dedup": 1e-6}
SHIPPED_SCENARIOS = ("interior.json", "boundary_simple.json", "cluster.json")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


@dataclass(frozen=True)
class RunConfig:
    command: str
    seed: int = 0
    tolerances: dict[str, float] = field(default_factory=dict)
    output_path: Path | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}", key="command")
        if self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer", key="seed")
        for name, value in self.tolerances.items():
            if name not in TOLERANCE_DEFAULTS:
                raise ConfigError(f"unknown tolerance name (known: {', '.join(sorted(TOLERANCE_DEFAULTS))})", key=name)
            if not value > 0:
                raise ConfigError("tolerance must be > 0", key=name)

    def tol(self, name: str) -> float:
        return self.tolerances.get(name, TOLERANCE_DEFAULTS[name])


def _write_csv(out: io.TextIOBase, header: Sequence[str], rows) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])


# --- commands -------------------------------------------------------------------


def cmd_constants(args, rc: RunConfig, out) -> int:
    n = _need(args, "n")
    try:
        T = compute_constants(n, rc.tol("quadrature"))
    except ValueError as exc:
        raise ConfigError(str(exc), key="--n") from exc
    _write_csv(out, ["name", "value", "error_estimate"], T.rows())
    return EXIT_OK


def _load_Q(path: str, n: int) -> np.ndarray:
    doc = load_json(path)
    if isinstance(doc, dict):
        if set(doc) != {"Q"}:
            raise ConfigError("expected a matrix or an object with the single key 'Q'", path=path, key=",".join(sorted(set(doc) - {"Q"})) or "Q")
        doc = doc["Q"]
    try:
        Q = np.array(doc, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError("Q must be a matrix of numbers", path=path, key="Q") from exc
    if Q.shape != (n - 1, n - 1):
        raise ConfigError(f"Q must be {n - 1}x{n - 1} for n = {n}, got shape {Q.shape}", path=path, key="Q")
    if np.max(np.abs(Q - Q.T)) > 1e-12:
        raise ConfigError("Q is not symmetric", path=path, key="Q")
    if np.abs(np.linalg.eigvalsh(Q)).min() <= 1e-12:
        raise ConfigError("Q is degenerate", path=path, key="Q")
    return Q


def cmd_vortex(args, rc: RunConfig, out) -> int:
    from .vortex import find_critical_points

    n, m = _need(args, "n"), _need(args, "m")
    if n < 5 or m < 1:
        raise ConfigError("need n >= 5 and m >= 1", key="--n/--m")
    Q = _load_Q(_need(args, "Q"), n)
    res = find_critical_points(Q, m, n, starts=args.starts, seed=rc.seed, dedup_tol=rc.tol("dedup"))
    header = ["energy", "virial_residual", "morse_index"] + [f"xi_{i + 1}_{k + 1}" for i in range(m) for k in range(n - 1)]
    _write_csv(out, header, ([p.energy, p.virial_residual, p.morse_index, *p.config.xi.ravel()] for p in res))
    diag = ", ".join(f"{k}={v}" for k, v in sorted(res.diagnostics.items()))
    print(f"vortex: {diag}", file=sys.stderr)
    return EXIT_OK


def _scenario(args):
    from .predictor import BlowupScenario

    return BlowupScenario.from_json(_need(args, "config"))


def cmd_predict(args, rc: RunConfig, out) -> int:
    from .predictor import predict

    S = _scenario(args)
    eps = _need(args, "eps")
    if not eps > 0:
        raise ConfigError("eps must be > 0", key="--eps")
    P = predict(S, eps)
    n = S.n
    header = ["index", "type"] + [f"a_{k + 1}" for k in range(n + 1)] + ["lambda", "alpha", "mu"]
    _write_csv(out, header, ([i, P.kinds[i], *b.a.coords, b.lam, b.alpha, P.mu[i]] for i, b in enumerate(P.bubbles)))
    flags = P.neighborhood_flags()
    if not all(flags.values()):
        print(f"predict: neighborhood conditions not met at eps={fmt(eps)}: {flags}", file=sys.stderr)
    return EXIT_OK


def _eps_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse {text!r} as a comma-separated list of reals", key="--eps-list") from exc
    if not vals or any(not v > 0 for v in vals):
        raise ConfigError("eps values must be positive", key="--eps-list")
    return vals


SWEEP_HEADER = [
    "eps", "index", "type", "leading_E", "residual_E", "ratio_E",
    "leading_F", "residual_F", "ratio_F", "theoretical_remainder", "ratio",
]


def cmd_sweep(args, rc: RunConfig, out) -> int:
    from .predictor import sweep

    S = _scenario(args)
    reports = sweep(S, _eps_list(_need(args, "eps_list")))
    rows = []
    for R in reports:
        for r in R.rows:
            rows.append([R.eps, r.index, r.kind, r.leading_E, r.residual_E, r.ratio_E, r.leading_F, r.residual_F, r.ratio_F, r.theoretical_remainder, r.ratio])
        for b in R.barycentric:
            rows.append([R.eps, b.cluster, "barycentric", "", b.value, "", "", "", "", b.remainder_scale, ""])
    _write_csv(out, SWEEP_HEADER, rows)
    return EXIT_OK


def cmd_verify(args, rc: RunConfig, out) -> int:
    from .verify import run_checks

    configs = [args.config] if args.config else [resources.files("bubblekit") / "data" / s for s in SHIPPED_SCENARIOS]
    results = run_checks([str(c) for c in configs], seed=rc.seed, starts=args.starts)
    _write_csv(out, ["check", "value", "threshold", "status"], ([r.name, r.value, r.threshold, "pass" if r.ok else "FAIL"] for r in results))
    return EXIT_OK if all(r.ok for r in results) else EXIT_VERIFY


HANDLERS: dict[str, Callable] = {
    "constants": cmd_constants,
    "vortex": cmd_vortex,
    "predict": cmd_predict,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


# --- argument handling ----------------------------------------------------------


def _need(args, name: str):
    v = getattr(args, name)
    if v is None:
        raise ConfigError(f"{args.command} requires --{name.replace('_', '-')}", key=f"--{name.replace('_', '-')}")
    return v


def _parse_tolerance(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"tolerance value {value!r} is not a number") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bubblekit", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--Q", metavar="PATH", help="JSON matrix D^2 K_1(z) in the intrinsic frame")
    p.add_argument("--config", metavar="PATH", help="scenario JSON")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--eps", type=float)
    g.add_argument("--eps-list", metavar="CSV")
    p.add_argument("--starts", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, help="quadrature tolerance (constants)")
    p.add_argument("--tolerance", type=_parse_tolerance, action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--out", metavar="PATH")
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        tols = dict(args.tolerance)
        if args.tol is not None:
            tols["quadrature"] = args.tol
        rc = RunConfig(args.command, args.seed, tols, Path(args.out) if args.out else None)
        buf = io.StringIO()
        code = HANDLERS[args.command](args, rc, buf)
    except ConfigError as exc:
        print(f"bubblekit: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = buf.getvalue()
    if rc.output_path:
        try:
            rc.output_path.write_text(text)
        except OSError as exc:
            print(f"bubblekit: configuration error: {rc.output_path}: {exc.strerror}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())
