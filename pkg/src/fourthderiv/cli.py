"""``fourthderiv`` command line: sums, counts, checks, pipeline, sweeps, baselines.

Exit status: 0 success, 1 failed check or regression, 2 usage error,
3 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import signal
import sys
import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import baselines as bl
from . import bounds
from . import diophantine as dio
from . import inequalities as ineq
from . import reports, suites
from .expsum import sum_phase
from .forms import FORMS
from .phase import (certify_vdc, monomial, paper_example_phase, polynomial, quartic_phase)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
DEFAULT_MAX_TUPLES = 10**8
DEFAULT_MAX_SECONDS = 300.0

_POW = re.compile(r"^\s*([+-]?[\d.]+)\s*(\^|\*\*)\s*\(?\s*([+-]?[\d./]+)\s*\)?\s*$")


class UsageError(Exception):
    pass


def parse_number(text) -> Fraction | float:
    """Exact rational for ``3``, ``0.1``, ``1/10``; float for ``2^-26``, ``1e-3``, ``inf``."""
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if isinstance(text, float):
        return text
    s = str(text).strip()
    m = _POW.match(s)
    if m:
        base, exp = Fraction(m.group(1)), Fraction(m.group(3))
        if exp.denominator == 1:
            return base ** int(exp)
        return float(base) ** float(exp)
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        pass
    try:
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def parse_int(text) -> int:
    v = parse_number(text)
    if isinstance(v, float) or v.denominator != 1:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(v)


def parse_list(conv):
    def inner(text):
        if isinstance(text, (list, tuple)):
            return [conv(t) for t in text]
        return [conv(t) for t in str(text).split(",") if t.strip()]
    inner.__name__ = f"list_of_{conv.__name__}"
    return inner


def _plain(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else v
    return v


# -- budgets ----------------------------------------------------------------

@contextmanager
def time_budget(seconds: float):
    """Raise BudgetExceeded after ``seconds`` of wall time (main thread, POSIX)."""
    usable = hasattr(signal, "setitimer") and math.isfinite(seconds) and seconds > 0
    if not usable:
        yield
        return

    def _alarm(signum, frame):
        raise dio.BudgetExceeded(f"time budget of {seconds}s exceeded")

    old = signal.signal(signal.SIGALRM, _alarm)
    signal.setitimer(signal.ITIMER_REAL, seconds)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


# -- commands -----------------------------------------------------------------

def _timed(args, start: float):
    return (time.perf_counter() - start) * 1000.0 if args.timing else None


def _build_phase(args):
    M = args.M
    if M is None or M < 1:
        raise UsageError("--M must be a positive integer")
    fam = args.family
    if fam == "paper_example":
        return paper_example_phase(M)
    if fam == "quartic":
        if args.lam is None:
            raise UsageError("--family quartic needs --lambda")
        return quartic_phase(args.lam, M)
    if fam == "polynomial":
        if not args.coefficients:
            raise UsageError("--family polynomial needs --coefficients")
        return polynomial(args.coefficients, M)
    k = args.exponent
    coeff = args.coefficient
    if coeff is None:  # default: x^k / (100 M^k)
        coeff = Fraction(1, 100 * M**k) if isinstance(k, int) else 1.0 / (100 * float(M) ** k)
    return monomial(coeff, k, M)


def cmd_sum(args) -> tuple[list, int]:
    start = time.perf_counter()
    f = _build_phase(args)
    s = sum_phase(f, args.M).value
    try:
        lam = certify_vdc(f).lambda_
    except ValueError:
        lam = None
    return [{"M": args.M, "lambda": lam, "family": args.family, "sum_real": s.real,
             "sum_imag": s.imag, "sum_modulus": abs(s), "elapsed_ms": _timed(args, start)}], EXIT_OK


def _system_params(args) -> dio.SystemParams:
    need = ("R", "Q", "H", "delta") if args.system == "reducedJ" else ("R", "Q", "H", "N", "delta")
    missing = [k for k in need if getattr(args, k) is None]
    if missing:
        raise UsageError(f"--system {args.system} needs {', '.join('--' + k for k in missing)}")
    N = 1 if args.N is None else _plain(args.N)
    return dio.SystemParams(_plain(args.R), _plain(args.Q), _plain(args.H), N, _plain(args.delta))


def _points(args):
    if args.points:
        data = json.loads(Path(args.points).read_text())
        return np.asarray(data["x"], float), np.asarray(data["y"], float)
    if not args.random_points:
        raise UsageError("--system spacingB needs --points FILE or --random-points COUNT")
    rng = np.random.default_rng(args.seed)
    n = args.random_points
    return rng.random(n), rng.random(n)


def cmd_count(args) -> tuple[list, int]:
    start = time.perf_counter()
    row = {"system": args.system}
    sysname = args.system
    budget = args.max_tuples
    if sysname in ("thm2", "reducedJ"):
        p = _system_params(args)
        row.update({"R": p.R, "Q": p.Q, "H": p.H, "N": p.N, "delta": p.delta})
        if sysname == "thm2":
            res = dio.count_system_oracle(p, budget=budget, workers=args.workers)
            bound = dio.bound_theorem2(p, float(args.epsilon))
            row["params"] = {"epsilon": args.epsilon}
        else:
            res = dio.count_reduced_J(p.R, p.Q, p.H, p.delta, budget=budget)
            bound = (float(p.R) * float(p.Q) * float(p.H)) ** (1 + float(args.epsilon)) \
                * (1 + float(p.Q) * float(p.delta))
            row.update({"N": None, "params": {"epsilon": args.epsilon}})
    elif sysname == "lemma5":
        need = ("a", "b", "c", "V", "alpha", "beta")
        missing = [k for k in need if getattr(args, k) is None]
        if missing:
            raise UsageError(f"--system lemma5 needs {', '.join('--' + k for k in missing)}")
        vals = [_plain(getattr(args, k)) for k in need]
        res = dio.count_lemma5_triples(*vals)
        bound = dio.bound_lemma5(*vals)
        row["params"] = dict(zip(need, vals))
    elif sysname == "spacingB":
        if args.X1 is None or args.X2 is None:
            raise UsageError("--system spacingB needs --X1 and --X2")
        x, y = _points(args)
        res = dio.count_spacing_B(dio.SpacingInputs(x, y, float(args.X1), float(args.X2), 1.0),
                                  budget=budget)
        bound = None
        row["params"] = {"points": int(x.size), "X1": args.X1, "X2": args.X2}
    else:  # spacingN
        missing = [k for k in ("R", "Q", "H", "N", "mu") if getattr(args, k) is None]
        if missing:
            raise UsageError(f"--system spacingN needs {', '.join('--' + k for k in missing)}")
        ranges = tuple(int(getattr(args, k)) for k in ("R", "Q", "H", "N"))
        res = dio.count_spacing_N(ranges, float(args.mu), FORMS[args.p1], FORMS[args.p2],
                                  budget=budget)
        bound = None
        row.update(dict(zip(("R", "Q", "H", "N"), ranges)))
        row["params"] = {"mu": args.mu, "P1": args.p1, "P2": args.p2,
                         "best_Q1": res.details.get("best_Q1")}
    row.update({"count": res.count, "bound": bound,
                "ratio": None if bound is None else ineq.safe_ratio(res.count, bound),
                "method": res.method, "elapsed_ms": _timed(args, start)})
    return [row], EXIT_OK


def _lemma_row(rep) -> dict:
    if isinstance(rep, ineq.ExactReport):
        return {"check_id": rep.check_id, "lhs": _num(rep.lhs), "rhs": _num(rep.rhs),
                "ratio": None, "passed": rep.passed, "residual": rep.relative,
                "params": rep.params}
    return {"check_id": rep.check_id, "lhs": rep.lhs, "rhs": rep.rhs, "ratio": rep.ratio,
            "passed": rep.passed, "residual": None, "params": rep.params}


def _num(v):
    if isinstance(v, complex):
        return abs(v)
    if isinstance(v, Fraction):
        return float(v)
    try:
        return float(abs(v))
    except TypeError:
        return None


def _lemma_reports(args, rng) -> list:
    name = args.name
    k = args.instances
    out = []
    if name == "weyl_aa":
        M, H = args.M or 16, args.H or 16
        Q, R = args.Q or 4, args.R or 4
        for _ in range(k):
            a = np.exp(2j * np.pi * rng.random((M, H)))
            rep = ineq.check_weyl_aa(a, int(Q), int(R))
            rep.params.update({"M": M, "H": H})
            out.append(rep)
    elif name == "partial_sum":
        shape = tuple(args.shape or (8, 8))
        for _ in range(k):
            a = rng.integers(-1, 2, size=(1,) + shape).astype(complex)

            def phi(pts, shape=shape):
                v = np.ones(pts.shape[0])
                for j, s in enumerate(shape):
                    v = v * pts[:, j] / s
                return v[None, :]
            rep = ineq.check_partial_summation(a, phi, 1.0)
            rep.params.update({"shape": list(shape)})
            out.append(rep)
    elif name == "third_deriv":
        M = args.M or 1024
        mu = float(args.mu if args.mu is not None else Fraction(1, 1000))
        g = polynomial([0, 0, 0, Fraction(mu) / 6], M)
        u = polynomial([0, Fraction(math.sqrt(mu))], M) if args.twist else None
        out.append(ineq.check_third_derivative(g, u, M, mu))
    elif name == "shift":
        M, N = args.M or 100, int(args.N or 7)
        for _ in range(k):
            a = [int(v) for v in rng.integers(-9, 10, size=M)]
            out.append(ineq.check_shift_identity(a, N))
    elif name == "decomposition":
        M = args.M or 64
        f = paper_example_phase(M) if args.cubic is False else polynomial(
            [0, Fraction(1, 3), Fraction(1, 7), Fraction(1, 11)], M)
        for _ in range(k):
            tup = _decomposition_tuple(args, rng, M)
            out.append(ineq.check_phase_decomposition(f, *tup))
    elif name == "double_sieve":
        for _ in range(k):
            inputs, ranges, b = suites.double_sieve_instance(rng)
            out.append(ineq.check_double_sieve(inputs, ranges, b))
    return out


def _decomposition_tuple(args, rng, M):
    fixed = [args.m, args.r, args.q, args.h, args.n]
    if all(v is not None for v in fixed):
        return tuple(int(v) for v in fixed)
    while True:
        r, q, h, n = (int(rng.integers(-3, 4)), int(rng.integers(-3, 4)),
                      int(rng.integers(1, 5)), int(rng.integers(1, 4)))
        lo = 1 + h + max(0, -r) + max(0, -q)
        hi = M - h - n - abs(r) - abs(q) - 1
        if lo <= hi:
            return int(rng.integers(lo, hi + 1)), r, q, h, n


def cmd_lemma(args) -> tuple[list, int]:
    rng = np.random.default_rng(args.seed)
    reps = _lemma_reports(args, rng)
    rows = [_lemma_row(r) for r in reps]
    failed = any(r["passed"] is False for r in rows)
    return rows, EXIT_FAIL if failed else EXIT_OK


def _pipeline_rows(rep, store: bl.Baselines | None) -> tuple[list, bool]:
    rows, bad = [], False
    cfg_hash = None
    for r in rep.ratios:
        base = status = None
        if store is not None:
            if cfg_hash is None:
                cfg_hash = bl.params_hash({"lambda": rep.selection.lambda_, "family": "monomial"})
            base = store.get(f"pipeline.{r.check_id}", cfg_hash)
            status = bl.compare(r.ratio, base, "band", 0.05)
            bad |= status == "regressed"
        finite = math.isfinite(r.ratio) and r.ratio > 0
        bad |= (not finite) or r.passed is False
        rows.append({"check_id": r.check_id, "kind": "ratio", "lhs": r.lhs, "rhs": r.rhs,
                     "ratio": r.ratio, "passed": r.passed, "residual": None,
                     "baseline": base, "status": status})
    for x in rep.exact:
        bad |= not x.passed
        rows.append({"check_id": x.check_id, "kind": "exact", "lhs": _num(x.lhs),
                     "rhs": _num(x.rhs), "ratio": None, "passed": x.passed,
                     "residual": x.relative, "baseline": None, "status": None})
    return rows, bad


def cmd_pipeline(args) -> tuple[list, int]:
    lam = float(args.lam if args.lam is not None else 2.0**-26)
    budget = bounds.PipelineBudget(max_tuples=args.max_tuples, max_seconds=args.max_seconds)
    rep = bounds.run_pipeline(lam, epsilon=float(args.epsilon), budget=budget,
                              decomposition_samples=args.samples, seed=args.seed)
    store = bl.load(args.baseline_dir) if args.check_baseline else None
    rows, bad = _pipeline_rows(rep, store)
    return rows, EXIT_FAIL if bad else EXIT_OK


def cmd_sweep(args) -> tuple[list, int]:
    d = {"mode": args.mode, "family": args.sweep_family, "epsilon": float(args.epsilon),
         "seed": args.seed}
    if args.M_grid:
        d["M_grid"] = args.M_grid
    elif args.lambda_grid:
        d["lambda_grid"] = [float(v) for v in args.lambda_grid]
    if args.b_grid:
        d["b_grid"] = args.b_grid
    try:
        cfg = bounds.SweepConfig.from_dict(d)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    res = bounds.sweep_beta(cfg, workers=args.workers)
    summary = reports.canonical_json(res.summary()) + "\n"
    if args.summary:
        Path(args.summary).write_text(summary)
    elif args.output:
        Path(args.output).with_suffix(".summary.json").write_text(summary)
    else:
        sys.stderr.write(summary)
    return [r.as_row() for r in res.reports], EXIT_OK


def cmd_report(args) -> tuple[list, int]:
    names = args.suites or list(suites.SUITES)
    unknown = [n for n in names if n not in suites.SUITES]
    if unknown:
        raise UsageError(f"unknown suites {unknown}; choose from {sorted(suites.SUITES)}")
    store = bl.load(args.baseline_dir)
    rows, bad = [], False
    for name in names:
        res = suites.SUITES[name]()
        for msg in res.failures:
            sys.stderr.write(f"{name}: {msg}\n")
        bad |= bool(res.failures)
        for entry, base, status in res.compare(store):
            if args.update:
                store.set(entry.check_id, entry.phash, entry.observed)
                base, status = entry.observed, "updated"
            else:
                bad |= status != "ok"
            rows.append({"suite": name, "check_id": entry.check_id, "params_hash": entry.phash,
                         "observed": entry.observed, "baseline": base, "kind": entry.kind,
                         "tolerance": entry.tolerance, "status": status})
    if args.update:
        store.seed = suites.DEFAULT_SEED
        path = bl.save(store, args.baseline_dir)
        sys.stderr.write(f"wrote {len(store)} baselines to {path}\n")
    return rows, EXIT_FAIL if bad else EXIT_OK


COMMANDS = {"sum": cmd_sum, "count": cmd_count, "lemma": cmd_lemma, "pipeline": cmd_pipeline,
            "sweep": cmd_sweep, "report": cmd_report}


# -- parser -------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--config", metavar="FILE", help="JSON file of option values; flags override it")
    g.add_argument("-o", "--output", metavar="PATH", help="report file (default: stdout)")
    g.add_argument("--format", choices=reports.FORMATS, default="csv")
    g.add_argument("--seed", type=parse_int, default=suites.DEFAULT_SEED)
    g.add_argument("--workers", type=parse_int, default=os.cpu_count() or 1,
                   help="worker processes (default: number of processors)")
    g.add_argument("--max-tuples", type=parse_int, default=DEFAULT_MAX_TUPLES)
    g.add_argument("--max-seconds", type=float, default=DEFAULT_MAX_SECONDS)
    g.add_argument("--timing", action="store_true",
                   help="fill elapsed_ms columns (output is then not reproducible)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="fourthderiv",
        description="Exponential sums with a fourth-derivative condition: sums, exact "
                    "counters, inequality checks, the end-to-end chain, sweeps and baselines.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("sum", parents=[common], help="evaluate S_M = sum e(f(m))")
    p.add_argument("--family", choices=("monomial", "paper_example", "quartic", "polynomial"),
                   default="monomial")
    p.add_argument("--M", type=parse_int, required=True)
    p.add_argument("--coefficient", type=parse_number,
                   help="monomial coefficient (default 1/(100 M^k))")
    p.add_argument("--exponent", type=parse_int, default=4)
    p.add_argument("--lambda", dest="lam", type=parse_number, help="quartic: lambda x^4/24")
    p.add_argument("--coefficients", type=parse_list(parse_number), help="c0,c1,... (polynomial)")

    p = sub.add_parser("count", parents=[common], help="exact solution counts")
    p.add_argument("--system", choices=("thm2", "reducedJ", "lemma5", "spacingB", "spacingN"),
                   required=True)
    for k in ("R", "Q", "H", "N", "delta"):
        p.add_argument(f"--{k}", type=parse_number)
    p.add_argument("--epsilon", type=parse_number, default=Fraction(1, 10))
    for k in ("a", "b", "c"):
        p.add_argument(f"--{k}", type=parse_int)
    for k in ("V", "alpha", "beta", "mu", "X1", "X2"):
        p.add_argument(f"--{k}", type=parse_number)
    p.add_argument("--points", metavar="FILE", help='JSON {"x": [...], "y": [...]} (spacingB)')
    p.add_argument("--random-points", type=parse_int, metavar="COUNT",
                   help="seeded uniform points in [0,1)^2 (spacingB)")
    p.add_argument("--p1", choices=sorted(FORMS), default="p1")
    p.add_argument("--p2", choices=sorted(FORMS), default="p2")

    p = sub.add_parser("lemma", parents=[common], help="one inequality or identity check")
    p.add_argument("name", choices=("weyl_aa", "partial_sum", "third_deriv", "shift",
                                    "decomposition", "double_sieve"))
    p.add_argument("--instances", type=parse_int, default=1)
    for k in ("M", "H", "Q", "R", "N", "m", "r", "q", "h", "n"):
        p.add_argument(f"--{k}", type=parse_int)
    p.add_argument("--mu", type=parse_number)
    p.add_argument("--twist", action="store_true", help="third_deriv: u(x) = sqrt(mu) x")
    p.add_argument("--shape", type=parse_list(parse_int), help="partial_sum box, e.g. 8,8")
    p.add_argument("--cubic", action="store_true", default=False,
                   help="decomposition: cubic phase (exact rationals) instead of x^4/(100M^4)")

    p = sub.add_parser("pipeline", parents=[common], help="the full chain at one lambda")
    p.add_argument("--lambda", dest="lam", type=parse_number, help="default 2^-26")
    p.add_argument("--epsilon", type=parse_number, default=bounds.DEFAULT_EPSILON)
    p.add_argument("--samples", type=parse_int, default=64, help="decomposition samples")
    p.add_argument("--check-baseline", action="store_true",
                   help="compare each step with the pinned baseline (5%% band)")
    p.add_argument("--baseline-dir", default=None, help=f"default ${bl.ENV_VAR} or package data")

    p = sub.add_parser("sweep", parents=[common], help="grid of sums against a bound shape")
    p.add_argument("--mode", choices=sorted(bounds.MODE_BOUND), default="beta")
    p.add_argument("--family", dest="sweep_family", choices=("monomial", "paper_example"),
                   default="monomial")
    p.add_argument("--M-grid", dest="M_grid", type=parse_list(parse_int))
    p.add_argument("--lambda-grid", dest="lambda_grid", type=parse_list(parse_number))
    p.add_argument("--b-grid", dest="b_grid", type=parse_list(parse_number))
    p.add_argument("--epsilon", type=parse_number, default=bounds.DEFAULT_EPSILON)
    p.add_argument("--summary", metavar="PATH",
                   help="JSON summary path (default: OUTPUT with .summary.json, else stderr)")

    p = sub.add_parser("report", parents=[common], help="run suites against pinned baselines")
    p.add_argument("--suites", type=parse_list(str), help=f"subset of {','.join(suites.SUITES)}")
    p.add_argument("--update", action="store_true", help="write observed values as baselines")
    p.add_argument("--baseline-dir", default=None, help=f"default ${bl.ENV_VAR} or package data")
    return parser


def _config_path(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` become defaults that flags override."""
    path = _config_path(argv)
    command = next((t for t in argv if t in COMMANDS), None)
    if path is None or command is None:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    subparser = next(a for a in parser._actions
                     if isinstance(a, argparse._SubParsersAction)).choices[command]
    by_dest = {a.dest: a for a in subparser._actions}
    alias = {"lambda": "lam", "family": "sweep_family" if command == "sweep" else "family"}
    defaults = {}
    for key, val in cfg.items():
        dest = alias.get(key, key.replace("-", "_"))
        if dest not in by_dest or dest in ("help", "config"):
            raise UsageError(f"unknown config key {key!r} for {command}")
        action = by_dest[dest]
        if action.type is not None and val is not None and not isinstance(val, bool):
            val = action.type(val if isinstance(val, list) else str(val))
        if action.choices is not None and val not in action.choices:
            raise UsageError(f"config {key}={val!r} not in {sorted(action.choices)}")
        defaults[dest] = val
    subparser.set_defaults(**defaults)
    for a in subparser._actions:
        if a.dest in defaults:
            a.required = False
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, argparse.ArgumentTypeError) as exc:
        sys.stderr.write(f"fourthderiv: error: {exc}\n")
        return EXIT_USAGE
    if args.output:
        parent = Path(args.output).resolve().parent
        if not parent.is_dir():
            sys.stderr.write(f"fourthderiv: error: directory {parent} does not exist\n")
            return EXIT_USAGE
    try:
        with time_budget(args.max_seconds):
            rows, status = COMMANDS[args.command](args)
    except dio.BudgetExceeded as exc:
        sys.stderr.write(f"fourthderiv: budget exceeded: {exc}\n")
        return EXIT_BUDGET
    except (UsageError, ValueError, TypeError, ZeroDivisionError, KeyError, OSError) as exc:
        sys.stderr.write(f"fourthderiv: error: {exc}\n")
        return EXIT_USAGE
    text = reports.emit_report(rows, args.format, args.output, args.command)
    if not args.output:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
