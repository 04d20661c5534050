"""Acceptance criteria, one test each.

Every test records a PASS or FAIL line (printed at the end of the pytest
run) before asserting.  Run directly with ``python tests/test_acceptance.py``.
"""
import math
import random
import statistics
import sys
import time

import numpy as np
import pytest

from conftest import record
from instances import SIX_BIT_BAD, block_instance, four_bit, flooding_instance, two_router_scenario
from prefixfilter import (BAD, BLOCK_ALL, BLOCK_SOME, FLOODING, GOOD, DynamicSolverState, FloodingInstance,
                          InfeasibleError, Prefix, ScenarioConfig, WeightedAddressSet, assignment_violations,
                          block_dp, brute_force, brute_force_dist, coordinate, flooding_dp, gen_clustered_blacklist,
                          gen_good_traffic, kmeans_filters, score, solve_block_all, solve_block_some,
                          solve_flooding, solve_flooding_lagrangian, sweep_filters, tree_for)
from prefixfilter.cli import run_bench
from prefixfilter.dynamic import INCREMENTAL, REBUILD, batch_path
from prefixfilter.prefix import non_overlapping

BLOCK_SEEDS = range(500)
FLOOD_SEEDS = range(200)


def test_block_oracle_equivalence():
    start = time.perf_counter()
    mismatches = []
    infeasible = 0
    for seed in BLOCK_SEEDS:
        bad, good, f_max = block_instance(seed)
        for kind, solve in ((BLOCK_ALL, solve_block_all), (BLOCK_SOME, solve_block_some)):
            try:
                expected = brute_force(kind, bad, good, f_max).objective
            except InfeasibleError:
                infeasible += 1
                try:
                    solve(bad, good, f_max)
                    mismatches.append((seed, kind, "solver found a set"))
                except InfeasibleError:
                    pass
                continue
            got = solve(bad, good, f_max).objective
            if got != expected:
                mismatches.append((seed, kind, got, expected))
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 60
    record(1, "block-all/block-some match brute force", ok,
           f"{2 * len(BLOCK_SEEDS)} solves, {infeasible} infeasible verdicts, "
           f"{len(mismatches)} mismatches, {elapsed:.1f}s")
    assert not mismatches, mismatches[:5]
    assert elapsed < 60


def test_flooding_oracle_equivalence():
    start = time.perf_counter()
    mismatches = []
    infeasible = 0
    for seed in FLOOD_SEEDS:
        bad, good, f_max, cap = flooding_instance(seed)
        inst = FloodingInstance(bad, good, f_max, cap)
        try:
            expected = brute_force(FLOODING, bad, good, f_max, cap)
        except InfeasibleError as exc:
            infeasible += 1
            try:
                solve_flooding(inst)
                mismatches.append((seed, "solver found a set"))
            except InfeasibleError as err:
                if err.max_blockable != exc.max_blockable:
                    mismatches.append((seed, "certificate", err.max_blockable, exc.max_blockable))
            continue
        sol = solve_flooding(inst)
        if sol.collateral_damage != expected.objective or sol.residual_traffic > cap:
            mismatches.append((seed, sol.collateral_damage, expected.objective))
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 120
    record(2, "flooding matches brute force", ok,
           f"{len(FLOOD_SEEDS)} instances, {infeasible} infeasible verdicts, "
           f"{len(mismatches)} mismatches, {elapsed:.1f}s")
    assert not mismatches, mismatches[:5]
    assert elapsed < 120


def test_four_bit_fixture():
    bad, good = four_bit()
    sol = solve_block_all(bad, good, 4)
    optimum = brute_force(BLOCK_ALL, bad, good, 4).objective
    hand_made = score([Prefix(0, 2, 4), Prefix(4, 2, 4), Prefix(8, 2, 4), Prefix(12, 4, 4)], bad, good, BLOCK_ALL)
    ok = (sol.collateral_damage == optimum and sol.unblocked_bad_count == 0 and sol.filters_used <= 4
          and hand_made.unblocked_bad_count == 0 and hand_made.collateral_damage == 4)
    record(3, "W=4 fixture, four filters", ok,
           f"solver CD {sol.collateral_damage} = optimum {optimum} with {sol.filter_strings()}; "
           f"reference set feasible with CD {hand_made.collateral_damage}")
    assert ok


def test_six_bit_fixture():
    good = WeightedAddressSet.from_addresses((a for a in range(64) if a not in SIX_BIT_BAD + (37,)), GOOD, 6)
    lines = []
    ok = True
    for kind in (BLOCK_ALL, BLOCK_SOME):
        state = DynamicSolverState(kind, 3, 6, bad={a: 1 for a in SIX_BIT_BAD}, good=good)
        before = len(state.tree.internal_nodes())
        rep = state.insert(37)
        depth = state.tree.depth(state.tree.leaf_index[37])
        added = len(state.tree.internal_nodes()) - before
        fresh = state.fresh_objective()
        ok &= (added == 1 and len(rep.new_nodes) == 1 and rep.recomputed_node_count <= depth + 1
               and state.objective == fresh)
        lines.append(f"{kind}: +{added} node {rep.new_nodes[0]}, {rep.recomputed_node_count} tables "
                     f"(depth+1 = {depth + 1}), objective {state.objective} = fresh {fresh}")
    record(4, "inserting 37 into the 6-bit blacklist", ok, "; ".join(lines))
    assert ok


def _stream(kind, seed, ops=1000, peak=200):
    rng = random.Random(seed)
    good = WeightedAddressSet({a: rng.randint(1, 8) for a in rng.sample(range(256), 40)}, GOOD, 8)
    pool = [a for a in range(256) if a not in good]
    state = DynamicSolverState(kind, 6, 8, good=good)
    bad_ops = peak_seen = 0
    for _ in range(ops):
        # drift up towards the peak, then hover around it
        p_insert = 0.75 if len(state) < peak * 0.8 else 0.5
        free = [a for a in pool if a not in state.bad]
        if state.bad and (rng.random() > p_insert or not free or len(state) >= peak):
            state.remove(rng.choice(sorted(state.bad)))
        else:
            state.insert(rng.choice(free), rng.randint(1, 16))
        peak_seen = max(peak_seen, len(state))
        if state.objective != state.fresh_objective():
            bad_ops += 1
    return bad_ops, peak_seen


def test_dynamic_equivalence():
    failures, peaks = [], []
    for kind in (BLOCK_ALL, BLOCK_SOME):
        bad_ops, peak = _stream(kind, 11)
        peaks.append(peak)
        if bad_ops:
            failures.append((kind, bad_ops))
    # the path choice follows k < n / log2(n)
    rule_ok = all(batch_path(n, k)[0] == (INCREMENTAL if n > 1 and k < n / math.log2(n) else REBUILD)
                  for n in range(1, 400) for k in range(0, 120))
    rng = random.Random(5)
    batches_ok = True
    for _ in range(40):
        bad = {a: 1 for a in rng.sample(range(256), rng.randint(2, 150))}
        state = DynamicSolverState(BLOCK_ALL, 4, 8, bad=bad)
        ins = rng.sample([a for a in range(256) if a not in bad], rng.randint(0, 30))
        rem = rng.sample(sorted(bad), rng.randint(0, min(30, len(bad))))
        n, k = len(bad), len(ins) + len(rem)
        rep = state.apply_batch(ins, rem)
        batches_ok &= rep.path == (INCREMENTAL if k < n / math.log2(n) else REBUILD)
        batches_ok &= rep.objective_after == state.fresh_objective()
    ok = not failures and rule_ok and batches_ok
    record(5, "1,000-op streams and batch path rule", ok,
           f"peak N {max(peaks)}, objective mismatches {failures or 'none'}; rule {'holds' if rule_ok and batches_ok else 'broken'}")
    assert ok


def test_block_some_degenerates():
    diffs = []
    for seed in range(100):
        bad, good, f_max = block_instance(1000 + seed)
        f_max = max(1, f_max)
        heavy = bad.scaled(good.total + 1)
        some = solve_block_some(heavy, good, f_max)
        every = solve_block_all(bad, good, f_max)
        if some.collateral_damage != every.collateral_damage or some.unblocked_bad_count:
            diffs.append(seed)
    record(6, "block-some with heavy bad weight equals block-all", not diffs,
           f"100 instances, {len(diffs)} differ")
    assert not diffs, diffs


def _dist_scenarios(count):
    seed = 0
    while count:
        routers, bl = two_router_scenario(seed)
        seed += 1
        try:
            opt = brute_force_dist(routers, bl).objective
        except InfeasibleError:
            continue
        count -= 1
        yield routers, bl, opt


def test_weak_duality_and_recovery():
    flood_points = flood_bad = 0
    for seed in FLOOD_SEEDS:
        bad, good, f_max, cap = flooding_instance(seed)
        inst = FloodingInstance(bad, good, f_max, cap)
        try:
            opt = solve_flooding(inst).collateral_damage
        except InfeasibleError:
            continue
        res = solve_flooding_lagrangian(inst, max_iters=60)
        best = res.best_primal.collateral_damage if res.best_primal is not None else math.inf
        for pt in res.trace:
            flood_points += 1
            flood_bad += not (pt.dual_value <= opt + 1e-9 and pt.dual_value <= best + 1e-9)
    dist_points = dist_bad = 0
    gaps = []
    invalid = 0
    for routers, bl, opt in _dist_scenarios(100):
        res = coordinate(routers, bl)
        for rnd in res.rounds:
            dist_points += 1
            dist_bad += not (rnd.dual_value <= opt + 1e-9 and rnd.dual_value <= res.objective + 1e-9)
        if res.assignments is None or assignment_violations(res.assignments, routers, bl):
            invalid += 1
            gaps.append(math.inf)
            continue
        gaps.append((res.objective - opt) / opt if opt else (0.0 if res.objective == 0 else math.inf))
    within = sum(g <= 0.10 for g in gaps)
    finite = [g for g in gaps if math.isfinite(g)]
    ok = flood_bad == 0 and dist_bad == 0 and within >= 90
    record(7, "weak duality and distributed recovery", ok,
           f"{flood_points} flooding and {dist_points} coordination trace points, "
           f"{flood_bad + dist_bad} above the primal; {within}/100 scenarios within 10% "
           f"(mean gap {statistics.mean(finite):.2%}, max {max(finite):.2%}, {invalid} unrecovered)")
    assert flood_bad == 0 and dist_bad == 0
    assert within >= 90


F_SWEEP = (10, 25, 50, 100, 200, 500, 1000)


def test_dominance_over_kmeans():
    cfg = ScenarioConfig(width=32, seed=7)
    bad = gen_clustered_blacklist(cfg, 10_000, 50)
    good = gen_good_traffic(cfg, 20_000, 70, weights="constant:1", exclude=bad.entries.keys(),
                            prefixes=bad.clusters)
    rows = sweep_filters(BLOCK_ALL, bad, good, F_SWEEP)
    losses, gains = [], []
    for row in rows:
        km = kmeans_filters(bad, good, row.f, restarts=50, seed=0)
        if row.collateral_damage > km.collateral_damage:
            losses.append(row.f)
        if km.collateral_damage:
            gains.append(1 - row.collateral_damage / km.collateral_damage)
    median = statistics.median(gains) if gains else 0.0
    record(8, "optimal block-all vs K-means", not losses,
           f"N=10,000 in 50 clusters, F in {list(F_SWEEP)}: never worse; median CD reduction {median:.1%}")
    assert not losses, losses


def test_scaling():
    sizes = [12_500, 25_000, 50_000, 100_000]
    rows = run_bench(sizes, 1000, trials=3, seed=0)
    times = [sec for _, _, sec in rows]
    ratios = [b / a for a, b in zip(times, times[1:])]
    ok = max(ratios) <= 2.5 and times[-1] < 10
    record(9, "block-all runtime scaling at F=1,000", ok,
           "medians " + ", ".join(f"N={n}: {t:.2f}s" for n, t in zip(sizes, times))
           + "; ratios " + ", ".join(f"{r:.2f}" for r in ratios))
    assert max(ratios) <= 2.5
    assert times[-1] < 10


def _block_checks(seed):
    bad, good, f_max = block_instance(seed)
    tree = tree_for(bad, good)
    problems = []
    for kind in (BLOCK_ALL, BLOCK_SOME):
        z = block_dp(tree, kind, 6).root_values(8)
        if (np.diff(z) > 0).any():
            problems.append("z not monotone")
        try:
            sol = (solve_block_all if kind == BLOCK_ALL else solve_block_some)(bad, good, f_max)
        except InfeasibleError:
            continue
        if sol.filters_used > f_max or not non_overlapping(sol.filters):
            problems.append("bad filter set")
    if solve_block_all(bad, good, len(bad)).collateral_damage != 0:
        problems.append("CD at F=|BL| nonzero")
    return problems


def _flooding_checks(seed):
    bad, good, f_max, cap = flooding_instance(seed)
    inst = FloodingInstance(bad, good, f_max, cap)
    problems = []
    z = flooding_dp(inst.tree(), max(f_max, 1), cap).root_table()
    with np.errstate(invalid="ignore"):
        if (np.diff(z, axis=0) > 0).any() or (np.diff(z, axis=1) > 0).any():
            problems.append("Z not monotone")
    try:
        sol = solve_flooding(inst)
    except InfeasibleError:
        return problems
    if sol.filters_used > f_max or not non_overlapping(sol.filters) or sol.residual_traffic > cap:
        problems.append("bad filter set")
    return problems


def test_monotonicity_suite():
    problems = [(s, p) for s in BLOCK_SEEDS for p in _block_checks(s)]
    problems += [(s, p) for s in FLOOD_SEEDS for p in _flooding_checks(s)]
    record(10, "monotone tables, zero CD at F=|BL|, valid filter sets", not problems,
           f"{len(BLOCK_SEEDS)} block and {len(FLOOD_SEEDS)} flooding instances, {len(problems)} violations")
    assert not problems, problems[:5]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
