"""Command-line front end.

Exit codes: 0 success, 1 validation failure (invalid tree, failed verify
suite), 2 usage error. A path of ``-`` means stdin or stdout; when a data
file goes to stdout, summary lines go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import attacks, curves, protocols, scores
from .errors import CurveError, RuleError, TreeValidationError, UsageError
from .tree import MartingaleTree, StoppingRule, Violation, loads, to_dict, validate

DEFAULT_SEED = 42
CURVE_KINDS = ("C", "Cprime", "L", "U", "G", "D", "Lprime")
VERIFY_SUITES = ("martingale", "score-constancy", "conservation", "bounds")
CONSTANCY_TOL = 1e-3


class _Exit(Exception):
    def __init__(self, code: int, message: str = ""):
        super().__init__(message)
        self.code = code


def fmt(x: float) -> str:
    return f"{x:.6g}"


class _Out:
    """Where data and summary lines go for one command."""

    def __init__(self, dest: str | None):
        self.dest = dest
        self.summary = sys.stderr if dest == "-" else sys.stdout

    def data(self, text: str) -> None:
        if self.dest is None:
            return
        if self.dest == "-":
            sys.stdout.write(text)
            if not text.endswith("\n"):
                sys.stdout.write("\n")
        else:
            Path(self.dest).write_text(text)

    def say(self, line: str) -> None:
        print(line, file=self.summary)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise _Exit(2, f"cannot read {path}: {exc.strerror}")


def _load_tree(path: str, **checks) -> MartingaleTree:
    text = _read(path)
    try:
        tree = loads(text)
    except json.JSONDecodeError as exc:
        raise TreeValidationError([Violation((), "schema", f"not valid JSON: {exc}")])
    violations = validate(tree, **checks)
    if violations:
        raise TreeValidationError(violations)
    return tree


def _curve(kind: str, n: int, resolution: int) -> curves.Curve:
    if kind in ("C", "Cprime"):
        return curves.gap_curve(n, resolution, kind)
    return curves.bound_curve(kind, n, resolution)


# -- verbs --------------------------------------------------------------------------

def run_curve(args) -> int:
    out = _Out(args.out)
    c = _curve(args.kind, args.n, args.resolution)
    out.data(c.to_json() if args.format == "json" else c.to_csv())
    out.say(f"{args.kind}_{args.n}(0.5) = {fmt(c(0.5))}")
    return 0


def run_protocol(args) -> int:
    if args.config:
        spec = protocols.ProtocolSpec.from_json(_read(args.config))
    else:
        if args.kind is None or args.n is None:
            raise UsageError("protocol needs --kind and --n, or --config")
        spec = protocols.ProtocolSpec(kind=args.kind, n=args.n, x0=args.x0, k=args.k,
                                      resolution=args.resolution)
    tree = spec.build(max_depth=args.max_depth)
    out = _Out(args.out)
    out.data(json.dumps(to_dict(tree)))
    out.say(f"root = {fmt(tree.value)}")
    out.say(f"depth = {tree.height}")
    out.say(f"insecurity = {fmt(protocols.insecurity(tree))}")
    return 0


def _n_and_root(tree):
    return tree.height, tree.value


def run_attack(args) -> int:
    two_party = args.mode == "failstop"
    tree = _load_tree(args.tree, two_party=two_party, uniform_depth=two_party)
    n, root = _n_and_root(tree)
    uniform = tree.uniform and n > 0
    out = _Out(args.out)
    extra = {}
    if args.mode == "restart":
        rule, dev = attacks.restart_attack(tree, args.direction)
        bound = curves.bound_curve("L", n, args.resolution)(root) / 2 if uniform else None
        report = attacks.AttackReport(f"restart_{args.direction}", dev, rule, bound)
    elif args.mode == "maxscore":
        sr = scores.max_score(tree, args.norm)
        if not uniform:
            bound = None
        elif args.norm == "L1":
            bound = curves.gap_curve(n, args.resolution)(root)
        else:
            bound = root * (1 - root) / n
        report = attacks.AttackReport(f"maxscore_{args.norm}", sr.score, sr.rule, bound)
    elif args.mode == "specialized":
        score, rule = attacks.specialized_max_score(tree)
        bound = curves.gap_curve(n, args.resolution, "Cprime")(root) if uniform else None
        report = attacks.AttackReport("specialized", score, rule, bound)
    else:
        fs = attacks.failstop_attack(tree, args.resolution)
        party, dev = attacks.best_party_attack(fs)
        extra = {"attacker": party, "party_bound": curves.bound_curve("Lprime", n, args.resolution)(root) / 12}
        report = attacks.AttackReport("failstop", dev, fs.rule, fs.bound, fs.s_prime, fs.split, extra)
    out.data(report.to_json())
    if report.s_prime is not None:
        out.say(f"s_prime = {fmt(report.s_prime)} (bound {fmt(report.bound)})")
        out.say(f"best attacker = {extra['attacker']}, deviation = {fmt(report.deviation)} "
                f"(bound {fmt(extra['party_bound'])})")
    else:
        clears = "" if report.bound is None else f" (bound {fmt(report.bound)})"
        out.say(f"deviation = {fmt(report.deviation)}{clears}")
    return 0


def _suite(name, tree, resolution):
    """(passed, details) for one verify suite; assumes the tree parsed."""
    violations = validate(tree)
    if name == "martingale":
        return not violations, {"violations": [str(v) for v in violations]}
    if violations:
        return False, {"reason": "tree is not a valid martingale"}
    root, n = tree.value, tree.height
    if name == "conservation":
        s = scores.sum_squared_increments(tree)
        expected = root * (1 - root)
        return abs(s - expected) <= 1e-9, {"sum_squared_increments": s, "expected": expected}
    if name == "score-constancy":
        hi = scores.max_score(tree).score
        lo = scores.min_score(tree).score
        return hi - lo <= CONSTANCY_TOL, {"max_score": hi, "min_score": lo, "tolerance": CONSTANCY_TOL}
    if not tree.uniform or n == 0:
        return False, {"reason": "bounds need a tree with all leaves at one positive depth"}
    checks = {}
    ms = scores.max_score(tree).score
    checks["max_score>=C_n"] = (ms, curves.gap_curve(n, resolution)(root) - 1e-3)
    checks["max_score_L2>=D_n"] = (scores.max_score(tree, "L2").score, root * (1 - root) / n - 1e-9)
    checks["insecurity>=L_n/2"] = (protocols.insecurity(tree),
                                   curves.bound_curve("L", n, resolution)(root) / 2 - 1e-6)
    checks["specialized>=Cprime_n"] = (attacks.specialized_max_score(tree)[0],
                                       curves.gap_curve(n, resolution, "Cprime")(root) - 1e-3)
    detail = {k: {"value": v, "threshold": t, "pass": v >= t} for k, (v, t) in checks.items()}
    return all(d["pass"] for d in detail.values()), detail


def run_verify(args) -> int:
    suites = [s.strip() for s in args.suites.split(",") if s.strip()]
    if not suites:
        raise UsageError("--suites is empty")
    unknown = [s for s in suites if s not in VERIFY_SUITES]
    if unknown:
        raise UsageError(f"unknown suites {unknown}; choose from {', '.join(VERIFY_SUITES)}")
    text = _read(args.tree)
    try:
        tree = loads(text)
    except (json.JSONDecodeError, TreeValidationError) as exc:
        result = {"pass": False, "suites": {s: {"pass": False, "reason": f"unreadable tree: {exc}"}
                                            for s in suites}}
        _Out(args.out or "-").data(json.dumps(result))
        return 1
    result = {"suites": {}}
    for s in suites:
        ok, detail = _suite(s, tree, args.resolution)
        result["suites"][s] = {"pass": ok, **detail}
    result["pass"] = all(r["pass"] for r in result["suites"].values())
    _Out(args.out or "-").data(json.dumps(result))
    return 0 if result["pass"] else 1


def run_simulate(args) -> int:
    two_party = args.mode == "failstop"
    tree = _load_tree(args.tree, two_party=two_party, uniform_depth=two_party)
    if args.strategy:
        rule = StoppingRule.from_json(_read(args.strategy))
    elif args.mode == "failstop":
        rule = attacks.failstop_attack(tree, args.resolution).rule
    else:
        rule = attacks.restart_attack(tree, args.mode.split("_")[1])[0]
    mean, err = attacks.simulate_attack(tree, rule, args.mode, args.trials, args.seed)
    out = _Out(args.out)
    out.data(json.dumps({"mode": args.mode, "trials": args.trials, "seed": args.seed,
                         "mean": mean, "stderr": err}))
    out.say(f"mean = {fmt(mean)}, stderr = {fmt(err)}, shift = {fmt(mean - tree.value)}")
    return 0


def run_report(args) -> int:
    out = _Out(args.out or "-")
    if args.kind == "processors":
        rows = ["eps,optimal,majority"]
        for eps in args.eps:
            opt = protocols.processors_needed(args.x0, eps, "optimal_upper")
            maj = protocols.processors_needed(0.5, eps, "majority_asymptotic")
            rows.append(f"{eps:g},{opt},{maj}")
        out.data("\n".join(rows) + "\n")
        return 0
    rows = ["n,x,L,C,U"]
    for n in args.n:
        low, mid, high = (_curve(k, n, args.resolution) for k in ("L", "C", "U"))
        for x in args.x:
            rows.append(f"{n},{x:.12g},{low(x):.12g},{mid(x):.12g},{high(x):.12g}")
    out.data("\n".join(rows) + "\n")
    return 0


# -- parser -------------------------------------------------------------------------

def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _unit(text):
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    fmt_cls = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(prog="martgap", description=__doc__.splitlines()[0], formatter_class=fmt_cls)
    sub = p.add_subparsers(dest="verb", required=True, metavar="VERB")

    def resolution(sp):
        sp.add_argument("--resolution", type=_positive, default=curves.DEFAULT_RESOLUTION,
                        help="curve grid intervals")

    c = sub.add_parser("curve", help="sample a gap or bound curve", formatter_class=fmt_cls)
    c.add_argument("--kind", required=True, choices=CURVE_KINDS)
    c.add_argument("--n", type=_positive, required=True)
    resolution(c)
    c.add_argument("--format", choices=("csv", "json"), default="csv")
    c.add_argument("--out", help="output path, '-' for stdout; omitted prints the summary only")
    c.set_defaults(func=run_curve)

    pr = sub.add_parser("protocol", help="build a protocol tree", formatter_class=fmt_cls)
    pr.add_argument("--kind", choices=("optimal", "majority", "threshold"))
    pr.add_argument("--n", type=_positive)
    pr.add_argument("--x0", type=_unit, default=0.5)
    pr.add_argument("--k", type=int)
    resolution(pr)
    pr.add_argument("--max-depth", type=_positive, default=protocols.MAX_OPTIMAL_DEPTH,
                    help="refuse optimal trees deeper than this")
    pr.add_argument("--config", help="JSON protocol config instead of flags")
    pr.add_argument("--out", help="tree JSON path, '-' for stdout")
    pr.set_defaults(func=run_protocol)

    a = sub.add_parser("attack", help="run an attack on a tree file", formatter_class=fmt_cls)
    a.add_argument("mode", choices=("restart", "failstop", "specialized", "maxscore"))
    a.add_argument("tree", help="tree JSON path, '-' for stdin")
    a.add_argument("--direction", choices=("up", "down"), default="up")
    a.add_argument("--norm", choices=scores.NORMS, default="L1")
    resolution(a)
    a.add_argument("--out", help="attack report JSON path, '-' for stdout")
    a.set_defaults(func=run_attack)

    v = sub.add_parser("verify", help="check invariants of a tree file", formatter_class=fmt_cls)
    v.add_argument("tree")
    v.add_argument("--suites", default="martingale", help=f"comma list from {','.join(VERIFY_SUITES)}")
    resolution(v)
    v.add_argument("--out", help="result JSON path; stdout by default")
    v.set_defaults(func=run_verify)

    s = sub.add_parser("simulate", help="Monte Carlo replay of an attack", formatter_class=fmt_cls)
    s.add_argument("tree")
    s.add_argument("--mode", choices=attacks.SIM_MODES, default="restart_up")
    s.add_argument("--strategy", help="stopping rule JSON; computed from the tree if omitted")
    s.add_argument("--trials", type=int, default=1_000_000, help="number of simulated runs")
    s.add_argument("--seed", type=int, default=DEFAULT_SEED, help="generator seed (numpy PCG64)")
    resolution(s)
    s.add_argument("--out", help="result JSON path, '-' for stdout")
    s.set_defaults(func=run_simulate)

    r = sub.add_parser("report", help="processor counts or the curve sandwich table", formatter_class=fmt_cls)
    r.add_argument("kind", choices=("processors", "sandwich"))
    r.add_argument("--eps", type=float, nargs="+", default=[0.01])
    r.add_argument("--x0", type=float, default=0.5)
    r.add_argument("--n", type=_positive, nargs="+", default=[3])
    r.add_argument("--x", type=_unit, nargs="+", default=[0.5])
    resolution(r)
    r.add_argument("--out", help="CSV path; stdout by default")
    r.set_defaults(func=run_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Exit as exc:
        print(f"martgap: {exc}", file=sys.stderr)
        return exc.code
    except TreeValidationError as exc:
        print(f"martgap: {exc}", file=sys.stderr)
        return 1
    except (UsageError, RuleError, CurveError, ValueError, TypeError) as exc:
        print(f"martgap: {exc}", file=sys.stderr)
        return 2
