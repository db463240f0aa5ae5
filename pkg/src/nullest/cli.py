"""Command-line front end.

Exit codes:
  0  success
  2  malformed input, spec or arguments
  3  k >= n/2 (location not identifiable)
  4  estimator failure on the data
  5  a lower-bound verification check failed
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from typing import Any, Iterable, Sequence

import numpy as np

from .core_types import (
    EstimatorFailure,
    Hyperparams,
    IdentifiabilityError,
    NullEstError,
    NullParams,
    eps_location,
    eps_variance,
    huber_rate,
    rate_location_sq,
    rate_tv,
    rate_variance,
)

EXIT_OK, EXIT_INPUT, EXIT_IDENT, EXIT_ESTIMATOR, EXIT_VERIFY = 0, 2, 3, 4, 5

_REAL = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# Formatting and parsing
# ---------------------------------------------------------------------------


def format_number(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        return "null"
    return format(v, ".17g")


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON with insertion-ordered keys and 17-significant-digit floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    return format_number(obj)


def parse_reals(lines: Iterable[str]) -> np.ndarray:
    """Newline-delimited decimal reals; leading '#' lines are a header."""
    rows = list(lines)
    while rows and not rows[-1].strip():
        rows.pop()
    vals = []
    in_header = True
    for i, raw in enumerate(rows, start=1):
        line = raw.strip()
        if in_header and line.startswith("#"):
            continue
        in_header = False
        if not _REAL.match(line):
            raise CliError(EXIT_INPUT, f"line {i}: not a decimal real: {raw.rstrip()!r}")
        vals.append(float(line))
    if not vals:
        raise CliError(EXIT_INPUT, "input contains no values")
    arr = np.asarray(vals)
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise CliError(EXIT_INPUT, f"value {bad + 1} overflows to a non-finite number")
    return arr


def _read_text(path: str | None) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise CliError(EXIT_INPUT, f"{path} is not valid UTF-8") from None


def _write(path: str | None, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _hyperparams(pairs: Sequence[str] | None) -> Hyperparams:
    overrides = {}
    for item in pairs or []:
        if "=" not in item:
            raise CliError(EXIT_INPUT, f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        overrides[key.strip()] = val.strip()
    try:
        return Hyperparams().with_overrides(overrides)
    except (KeyError, ValueError) as exc:
        raise CliError(EXIT_INPUT, f"bad hyperparameter override: {exc}") from None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_estimate(args) -> int:
    from .adaptation import adaptive_null_report
    from .location import estimate_location_unknown_var

    if (args.k is None) == (not args.adaptive):
        raise CliError(EXIT_INPUT, "give exactly one of --k or --adaptive")
    hp = _hyperparams(args.set)
    x = parse_reals(_read_text(args.input).splitlines())
    n = x.size
    try:
        if args.k is not None:
            if args.k < 0:
                raise CliError(EXIT_INPUT, "k must be nonnegative")
            if 2 * args.k >= n:
                raise IdentifiabilityError(f"k = {args.k} >= n/2 = {n / 2}")
            est = estimate_location_unknown_var(x, args.k, hp, args.seed)
            out = {
                "theta_hat": est.theta_hat,
                "sigma2_hat": est.sigma2_hat,
                "k_used_or_adaptive": args.k,
                "tau": est.tau_used,
                "pilot_sigma2": est.pilot_sigma2,
                "tv_rate_bound": rate_tv(max(args.k, 1), n),
            }
        else:
            rep = adaptive_null_report(x, hp, args.seed)
            kp = rep.location.k_prime
            out = {
                "theta_hat": rep.params.theta,
                "sigma2_hat": rep.params.sigma2,
                "k_used_or_adaptive": "adaptive",
                "tau": None,
                "pilot_sigma2": None,
                "tv_rate_bound": None if kp is None else rate_tv(kp, n),
                "k_prime_location": kp,
                "k_prime_variance": rep.variance.k_prime,
            }
    except IdentifiabilityError as exc:
        raise CliError(EXIT_IDENT, str(exc)) from None
    except (EstimatorFailure, ValueError, ArithmeticError) as exc:
        raise CliError(EXIT_ESTIMATOR, f"estimator failed: {exc}") from None
    _write(args.output, dumps(out))
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .sim import build_contamination, generate_frequentist

    hp = _hyperparams(args.set)
    if args.n < 2:
        raise CliError(EXIT_INPUT, "n must be >= 2")
    if args.k < 0:
        raise CliError(EXIT_INPUT, "k must be nonnegative")
    if 2 * args.k >= args.n:
        raise CliError(EXIT_IDENT, f"k = {args.k} >= n/2")
    try:
        truth = NullParams(args.theta, args.sigma2)
        cont = build_contamination(args.contamination, args.n, args.k, truth, hp, args.shift, None)
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    x = generate_frequentist(truth, cont, args.n, args.seed)
    head = f"# theta={format_number(args.theta)} sigma2={format_number(args.sigma2)} k={args.k} contamination={cont.kind}"
    body = "\n".join(format_number(v) for v in x.values)
    _write(args.output, head + "\n" + body)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .sim import SweepSpec, run_sweep

    hp = _hyperparams(args.set)
    text = _read_text(args.input)
    try:
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise ValueError("sweep spec must be a JSON object")
        if args.seed is not None:
            raw["seed"] = args.seed
        spec = SweepSpec.from_dict(raw)
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_INPUT, f"bad sweep spec: {exc}") from None
    try:
        res = run_sweep(spec, hp, args.threads)
    except ValueError as exc:
        raise CliError(EXIT_INPUT, f"bad sweep spec: {exc}") from None
    _write(args.output, res.to_csv() if args.format == "csv" else res.to_json())
    return EXIT_OK


def cmd_verify_lowerbound(args) -> int:
    from .lowerbound import PriorConstruction, lower_bound_report

    hp = _hyperparams(args.set)
    try:
        eps_list = [float(e) for e in args.eps.split(",") if e.strip()]
    except ValueError:
        raise CliError(EXIT_INPUT, f"bad --eps list {args.eps!r}") from None
    if not eps_list:
        raise CliError(EXIT_INPUT, "no eps values")
    reports = []
    failed = []
    for eps in eps_list:
        try:
            pc = PriorConstruction.from_hyperparams(eps, args.n, hp)
        except ValueError as exc:
            raise CliError(EXIT_INPUT, str(exc)) from None
        rep = lower_bound_report(pc).as_dict()
        if not hp.c0_in_contract:
            rep["failures"].insert(0, "c0")
            rep["passed"] = False
        reports.append(rep)
        failed += [f"eps={eps!r}: {f}" for f in rep["failures"]]
    _write(args.output, dumps({"reports": reports, "passed": not failed}))
    if failed:
        for f in failed:
            print(f"verification failed: {f}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_rates(args) -> int:
    n, k = args.n, args.k
    if n < 2 or k < 0:
        raise CliError(EXIT_INPUT, "need n >= 2 and k >= 0")
    if 2 * k >= n:
        raise CliError(EXIT_IDENT, f"k = {k} >= n/2")
    kk = max(k, 1)
    out = {
        "n": n,
        "k": k,
        "rate_location_sq": rate_location_sq(kk, n, args.sigma2),
        "rate_variance": rate_variance(kk, n),
        "rate_tv": rate_tv(kk, n),
        "eps_location": eps_location(k, n),
        "eps_variance": eps_variance(k, n),
        "huber_rate": huber_rate(k, n),
    }
    _write(args.output, dumps(out))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _defaults_epilog() -> str:
    hp = Hyperparams().as_dict()
    lines = ["hyperparameters (override with --set key=value):"]
    lines += [f"  {k} = {v}" for k, v in hp.items()]
    lines.append("")
    lines.append(__doc__.strip())
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    p = argparse.ArgumentParser(prog="nullest", description="Empirical null estimation under sparse contamination.", epilog=_defaults_epilog(), formatter_class=fmt)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_default: int | None = 0):
        sp.add_argument("-o", "--output", help="output path (default stdout)")
        sp.add_argument("--seed", type=int, default=seed_default)
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="hyperparameter override, repeatable")

    e = sub.add_parser("estimate", help="estimate theta and sigma^2 from a data file", epilog=_defaults_epilog(), formatter_class=fmt)
    e.add_argument("input", nargs="?", help="newline-delimited reals ('-' for stdin)")
    e.add_argument("--k", type=int, help="assumed number of contaminated coordinates")
    e.add_argument("--adaptive", action="store_true", help="adapt to unknown k")
    e.add_argument("--format", choices=["json"], default="json")
    common(e)
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("simulate", help="write one contaminated dataset")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, default=0)
    s.add_argument("--theta", type=float, default=0.0)
    s.add_argument("--sigma2", type=float, default=1.0)
    s.add_argument("--contamination", default="constant-shift", choices=["zero", "constant-shift", "two-sided-blocks", "pi-over-omega"])
    s.add_argument("--shift", type=float, help="shift value (or frequency for pi-over-omega)")
    common(s)
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run a Monte Carlo sweep from a JSON spec")
    w.add_argument("input", nargs="?", help="sweep spec JSON ('-' for stdin)")
    w.add_argument("--format", choices=["csv", "json"], default="csv")
    w.add_argument("--threads", type=int, help="worker threads (capped by NULL_EST_THREADS)")
    common(w, seed_default=None)
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify-lowerbound", help="check the lower-bound prior constructions")
    v.add_argument("--eps", default="0.1,0.3,0.45", help="comma-separated eps values")
    v.add_argument("--n", type=int, default=10_000)
    common(v)
    v.set_defaults(func=cmd_verify_lowerbound)

    r = sub.add_parser("rates", help="print minimax rate formulas at (n, k)")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--k", type=int, required=True)
    r.add_argument("--sigma2", type=float, default=1.0)
    common(r)
    r.set_defaults(func=cmd_rates)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"nullest: {exc}", file=sys.stderr)
        return exc.code
    except NullEstError as exc:
        print(f"nullest: {exc}", file=sys.stderr)
        return EXIT_ESTIMATOR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
