"""``prefixfilter`` command line: solve, sweep, bench and update.

Exit codes: 0 success, 1 usage or input error, 2 infeasible.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import statistics
import sys
import time
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from . import __version__
from .block import solve_block_all, solve_block_some, sweep_filters
from .dist import assignment_record, coordinate, load_routers
from .dynamic import DynamicSolverState, dump_state, load_state
from .errors import FilterError, InfeasibleError, InputError
from .flooding import FloodingInstance, solve_flooding
from .prefix import IPV4_WIDTH, parse_address
from .solution import BLOCK_ALL, BLOCK_SOME, FLOODING, FilterSolution
from .traffic import (BAD, GOOD, PRESETS, ScenarioConfig, WeightedAddressSet, gen_clustered_blacklist,
                      gen_good_traffic, generate_scenario, load_address_set, load_scenario_config)

SCHEMA = 1
EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2
DIST_FLOODING = "dist-flooding"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _int_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}")
    try:
        a, b = _count(lo), _count(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
    if a > b or a < 0:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return a, b


def _count(text: str) -> int:
    text = text.strip().lower()
    scale = {"k": 1_000, "m": 1_000_000}.get(text[-1:], 1)
    return int(float(text[:-1]) * scale) if scale > 1 else int(text)


def _emit_json(obj, out) -> None:
    out.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- inputs ---------------------------------------------------------------------

def _read_set(path: str | None, role: str, width: int) -> WeightedAddressSet:
    if path is None:
        return WeightedAddressSet.empty(role, width)
    try:
        return load_address_set(Path(path), role, width)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _scale(bad: WeightedAddressSet, ratio: str | None) -> WeightedAddressSet:
    if ratio is None:
        return bad
    try:
        r = Fraction(ratio)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"bad weight ratio {ratio!r}") from None
    if r <= 0:
        raise InputError("weight ratio must be > 0")
    scaled = {}
    for a, w in bad.entries.items():
        v = w * r
        if v.denominator != 1:
            raise InputError(f"weight ratio {ratio} gives a non-integer weight {float(v)}")
        scaled[a] = int(v)
    return bad.with_entries(scaled)


def _config(args) -> ScenarioConfig | None:
    if not getattr(args, "preset", None):
        return None
    if args.preset in PRESETS:
        cfg = PRESETS[args.preset]
    else:
        try:
            cfg = load_scenario_config(args.preset)
        except OSError as exc:
            raise InputError(f"cannot read {args.preset}: {exc.strerror}") from None
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _inputs(args) -> tuple[WeightedAddressSet, WeightedAddressSet, dict]:
    cfg = _config(args)
    if cfg is not None:
        if args.bad or args.good:
            raise InputError("--preset and --bad/--good are mutually exclusive")
        bad, good = generate_scenario(cfg)
        width = cfg.width
        if args.f_max is None:
            args.f_max = cfg.f_max
        if getattr(args, "capacity", None) is None and cfg.capacity is not None:
            args.capacity = cfg.capacity
    else:
        if not args.bad:
            raise InputError("--bad (or --preset) is required")
        width = args.width or IPV4_WIDTH
        bad = _read_set(args.bad, BAD, width)
        good = _read_set(args.good, GOOD, width)
    if args.f_max is None:
        raise InputError("--f-max is required")
    bad = _scale(bad, args.weight_ratio)
    echo = {
        "bad": args.bad, "good": args.good, "preset": getattr(args, "preset", None),
        "width": width, "f_max": args.f_max, "weight_ratio": args.weight_ratio,
        "capacity": getattr(args, "capacity", None),
    }
    return bad, good, echo


def _add_input_flags(p: argparse.ArgumentParser, capacity: bool = False) -> None:
    p.add_argument("--bad", help="blacklist file, one address[,weight] per line")
    p.add_argument("--good", help="good-traffic file in the same format")
    p.add_argument("--preset", help="generate inputs from a named preset or a key=value preset file")
    p.add_argument("--f-max", type=int, help="filter budget")
    p.add_argument("--width", type=int, help="address width in bits (default 32)")
    p.add_argument("--weight-ratio", help="multiply every bad weight by this ratio (e.g. 1024 or 3/2)")
    p.add_argument("--seed", type=int, help="generator seed (with --preset)")
    if capacity:
        p.add_argument("--capacity", type=int, help="link capacity in traffic quanta")


# -- commands -------------------------------------------------------------------

def _report(kind: str, echo: dict, sol: FilterSolution, elapsed: float, args) -> dict:
    rep = {
        "schema": SCHEMA,
        "problem": kind,
        "config": echo,
        "seed": args.seed,
        "filters": sol.filter_strings(),
        "metrics": sol.metrics(),
    }
    if not args.no_timing:
        rep["runtime_ms"] = round(elapsed * 1000.0, 3)
    return rep


def _infeasible(kind: str, exc: InfeasibleError, out) -> int:
    _emit_json({"schema": SCHEMA, "problem": kind, "status": "infeasible", "reason": str(exc),
                "max_blockable": exc.max_blockable, "required": exc.required}, out)
    return EXIT_INFEASIBLE


def cmd_solve(args, out) -> int:
    kind = args.command
    if kind == DIST_FLOODING:
        return _solve_dist(args, out)
    bad, good, echo = _inputs(args)
    start = time.perf_counter()
    try:
        if kind == BLOCK_ALL:
            sol = solve_block_all(bad, good, args.f_max)
        elif kind == BLOCK_SOME:
            sol = solve_block_some(bad, good, args.f_max)
        else:
            if args.capacity is None:
                raise InputError("flooding needs --capacity")
            sol = solve_flooding(FloodingInstance(bad, good, args.f_max, args.capacity))
    except InfeasibleError as exc:
        return _infeasible(kind, exc, out)
    _emit_json(_report(kind, echo, sol, time.perf_counter() - start, args), out)
    return EXIT_OK


def _solve_dist(args, out) -> int:
    if not args.scenario:
        raise InputError("dist-flooding needs --scenario")
    routers, blacklist = load_routers(args.scenario, args.width)
    start = time.perf_counter()
    try:
        res = coordinate(routers, blacklist, max_rounds=args.max_rounds, eps=args.eps,
                         threads=args.threads)
    except InfeasibleError as exc:
        return _infeasible(DIST_FLOODING, exc, out)
    elapsed = time.perf_counter() - start
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            res.write_trace(fh)
    rep = {
        "schema": SCHEMA,
        "problem": DIST_FLOODING,
        "config": {"scenario": args.scenario, "max_rounds": args.max_rounds, "eps": args.eps},
        "seed": args.seed,
        "routers": assignment_record(res.assignments) if res.assignments else None,
        "objective": res.objective,
        "dual_bound": res.dual_bound,
        "gap": res.gap,
        "rounds": len(res.rounds),
        "converged": res.converged,
    }
    if not args.no_timing:
        rep["runtime_ms"] = round(elapsed * 1000.0, 3)
    if res.assignments is None:
        rep["status"] = "infeasible"
        rep["reason"] = "no conflict-free assignment recovered"
        _emit_json(rep, out)
        return EXIT_INFEASIBLE
    _emit_json(rep, out)
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    if args.problem == FLOODING:
        raise InputError("sweep supports block-all and block-some")
    args.f_max = args.f_range[1] if args.f_max is None else args.f_max
    bad, good, _ = _inputs(args)
    lo, hi = args.f_range
    rows = sweep_filters(args.problem, bad, good, range(lo, hi + 1))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["F", "CD", "UBIP", "objective", "filters_used"])
    for r in rows:
        if r.feasible:
            writer.writerow([r.f, r.collateral_damage, r.unblocked_bad_count, int(r.objective), r.filters_used])
        else:
            writer.writerow([r.f, "", "", "infeasible", ""])
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        out.write(buf.getvalue())
    return EXIT_OK


def bench_sizes(lo: int, hi: int) -> list[int]:
    if lo < 1:
        raise InputError("--n-range must start at 1 or more")
    sizes = []
    n = lo
    while n <= hi:
        sizes.append(n)
        n *= 2
    return sizes


def run_bench(sizes, f_max: int, trials: int, seed: int = 0, clusters: int = 50,
              good_factor: float = 1.0, width: int = IPV4_WIDTH, problem: str = BLOCK_ALL):
    """Median solve time per blacklist size on generated clustered scenarios.

    Returns rows ``(n, objective, median_seconds)``.
    """
    if trials < 1:
        raise InputError("--trials must be >= 1")
    solve = solve_block_all if problem == BLOCK_ALL else solve_block_some
    rows = []
    for n in sizes:
        cfg = ScenarioConfig(width=width, f_max=f_max, seed=seed)
        k = min(clusters, n)
        bad = gen_clustered_blacklist(cfg, n, k)
        good = gen_good_traffic(cfg, int(n * good_factor), k, exclude=bad.entries.keys(),
                                prefixes=bad.clusters[:k // 2])
        times = []
        for _ in range(trials):
            start = time.perf_counter()
            sol = solve(bad, good, f_max)
            times.append(time.perf_counter() - start)
        rows.append((n, sol.objective, statistics.median(times)))
    return rows


def cmd_bench(args, out) -> int:
    if args.problem not in (BLOCK_ALL, BLOCK_SOME):
        raise InputError("bench supports block-all and block-some")
    rows = run_bench(bench_sizes(*args.n_range), args.f_max, args.trials, args.seed or 0,
                     args.clusters, args.good_factor, args.width, args.problem)
    writer = csv.writer(out, lineterminator="\n")
    if args.no_timing:
        writer.writerow(["N", "objective"])
        for n, obj, _ in rows:
            writer.writerow([n, int(obj)])
        return EXIT_OK
    writer.writerow(["N", "objective", "median_runtime_ms", "ratio"])
    prev = None
    for n, obj, sec in rows:
        ratio = "" if prev is None or prev == 0 else f"{sec / prev:.3f}"
        writer.writerow([n, int(obj), f"{sec * 1000.0:.3f}", ratio])
        prev = sec
    return EXIT_OK


def parse_ops(text: str, width: int) -> list[tuple[int, str, int | None, object]]:
    """``(line, op, address, weight_or_error)`` per non-blank line of an ops file."""
    ops = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        verb, _, rest = line.partition(" ")
        try:
            if verb not in ("insert", "remove"):
                raise InputError(f"unknown operation {verb!r}")
            addr_text, _, weight = rest.strip().partition(",")
            addr = parse_address(addr_text, width)
            if verb == "remove" and weight:
                raise InputError("remove takes no weight")
            w = int(weight) if weight.strip() else 1
            ops.append((lineno, verb, addr, w))
        except ValueError as exc:
            ops.append((lineno, verb, None, InputError(str(exc))))
    return ops


def _save_state(state: DynamicSolverState, path: Path) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        dump_state(state, fh)
    os.replace(tmp, path)


def cmd_update(args, out) -> int:
    path = Path(args.state)
    if path.exists():
        with open(path, encoding="utf-8") as fh:
            state = load_state(fh, str(path))
    else:
        if args.f_max is None:
            raise InputError(f"{path} does not exist; give --f-max (and --bad/--good) to create it")
        bad = _read_set(args.bad, BAD, args.width)
        good = _read_set(args.good, GOOD, args.width)
        state = DynamicSolverState(args.kind, args.f_max, args.width, bad=bad, good=good)
    try:
        text = Path(args.ops).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {args.ops}: {exc.strerror}") from None
    ops = parse_ops(text, state.width)

    def emit(rec):
        out.write(json.dumps(rec, sort_keys=True) + "\n")

    if args.batch:
        bad_lines = [(ln, w) for ln, _, _, w in ops if isinstance(w, Exception)]
        if bad_lines:
            raise InputError(f"line {bad_lines[0][0]}: {bad_lines[0][1]}")
        rep = state.apply_batch([(a, w) for _, v, a, w in ops if v == "insert"],
                                [a for _, v, a, _ in ops if v == "remove"])
        emit({"op": "batch", "path": rep.path, "ops": rep.ops, "size_before": rep.size_before,
              "threshold": round(rep.threshold, 6), "objective_before": rep.objective_before,
              "objective_after": rep.objective_after})
    else:
        for lineno, verb, addr, w in ops:
            try:
                if isinstance(w, Exception):
                    raise w
                rep = state.insert(addr, w) if verb == "insert" else state.remove(addr)
                emit({"line": lineno, **rep.as_record(state.width)})
            except InputError as exc:
                if args.strict:
                    raise InputError(f"line {lineno}: {exc}") from None
                emit({"line": lineno, "op": verb, "error": str(exc)})
    status = EXIT_OK
    if args.verify:
        fresh = state.fresh_objective()
        ok = fresh == state.objective
        emit({"verify": ok, "objective": state.objective, "fresh_objective": fresh})
        if not ok:
            status = EXIT_INPUT
    _save_state(state, path)
    return status


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prefixfilter", description="Optimal source-prefix filters against blacklists.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        BLOCK_ALL: "block every bad address with least collateral damage",
        BLOCK_SOME: "trade collateral damage against unblocked bad weight",
        FLOODING: "least collateral damage that brings traffic under the capacity",
        DIST_FLOODING: "FLOODING across several routers with single coverage",
    }
    for kind, text in helps.items():
        p = sub.add_parser(kind, help=text)
        p.add_argument("--no-timing", action="store_true", help="omit runtimes (byte-stable output)")
        if kind != DIST_FLOODING:
            _add_input_flags(p, capacity=kind == FLOODING)
        else:
            p.add_argument("--scenario", help="router scenario file")
            p.add_argument("--width", type=int, help="address width (overrides the scenario file)")
            p.add_argument("--seed", type=int, help="echoed in the report")
            p.add_argument("--max-rounds", type=int, default=100)
            p.add_argument("--eps", type=float, default=1e-3, help="relative duality gap to stop at")
            p.add_argument("--threads", type=int, default=1, help="router subproblems solved in parallel")
            p.add_argument("--trace", help="write the per-round trace as JSON lines")
        p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="objective for every filter budget in a range, as CSV")
    _add_input_flags(p)
    p.add_argument("--problem", choices=(BLOCK_ALL, BLOCK_SOME), default=BLOCK_ALL)
    p.add_argument("--f-range", type=_int_range, required=True, help="A..B inclusive")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="median runtime per blacklist size, as CSV")
    p.add_argument("--n-range", type=_int_range, required=True, help="A..B, doubling from A (k/M suffixes ok)")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--f-max", type=int, default=1000)
    p.add_argument("--problem", choices=(BLOCK_ALL, BLOCK_SOME), default=BLOCK_ALL)
    p.add_argument("--clusters", type=int, default=50)
    p.add_argument("--good-factor", type=float, default=1.0, help="good sources per bad source")
    p.add_argument("--width", type=int, default=IPV4_WIDTH)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-timing", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("update", help="replay insert/remove operations against a saved state")
    p.add_argument("--state", required=True, help="state snapshot (created if missing)")
    p.add_argument("--ops", required=True, help="lines 'insert ADDR[,w]' or 'remove ADDR'")
    p.add_argument("--verify", action="store_true", help="compare against a fresh solve at the end")
    p.add_argument("--strict", action="store_true", help="stop at the first bad operation")
    p.add_argument("--batch", action="store_true", help="apply all operations as one batch")
    p.add_argument("--kind", choices=(BLOCK_ALL, BLOCK_SOME), default=BLOCK_ALL, help="for a new state")
    p.add_argument("--f-max", type=int, help="for a new state")
    p.add_argument("--width", type=int, default=IPV4_WIDTH, help="for a new state")
    p.add_argument("--bad", help="initial blacklist for a new state")
    p.add_argument("--good", help="good traffic for a new state")
    p.set_defaults(func=cmd_update)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except FilterError as exc:
        print(f"prefixfilter: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
