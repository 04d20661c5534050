import numpy as np
import pytest

from prefixfilter import (BAD, FLOODING, GOOD, FloodingInstance, InfeasibleError, InputError, WeightedAddressSet,
                          brute_force, expand_filters, flooding_dp, max_blockable, score, solve_flooding,
                          solve_flooding_lagrangian)
from prefixfilter.flooding import diminishing, node_costs
from prefixfilter.prefix import non_overlapping

from instances import flooding_instance


def small():
    # W=5: four bad sources of 10 and three good sources of 5
    bad = WeightedAddressSet({1: 10, 2: 10, 17: 10, 30: 10}, BAD, 5)
    good = WeightedAddressSet({3: 5, 16: 5, 24: 5}, GOOD, 5)
    return bad, good


def test_small_instance_matches_enumeration():
    bad, good = small()
    sol = solve_flooding(FloodingInstance(bad, good, 2, 20))
    assert sol.collateral_damage == brute_force(FLOODING, bad, good, 2, 20).objective
    assert sol.residual_traffic <= 20 and sol.filters_used <= 2


def test_capacity_already_met():
    bad, good = small()
    sol = solve_flooding(FloodingInstance(bad, good, 3, bad.total + good.total))
    assert sol.filters == () and sol.collateral_damage == 0


def test_zero_capacity_single_filter_blocks_root():
    bad, good = small()
    sol = solve_flooding(FloodingInstance(bad, good, 1, 0))
    assert sol.collateral_damage == good.total and sol.filters_used == 1
    assert sol.filters[0].base == 0


def test_infeasible_certificate():
    bad, good = small()
    with pytest.raises(InfeasibleError) as err:
        solve_flooding(FloodingInstance(bad, good, 0, 10))
    assert err.value.max_blockable == 0 and err.value.required == 45


@pytest.mark.parametrize("seed", range(80))
def test_matches_brute_force(seed):
    bad, good, f_max, cap = flooding_instance(seed)
    inst = FloodingInstance(bad, good, f_max, cap)
    try:
        expected = brute_force(FLOODING, bad, good, f_max, cap)
    except InfeasibleError as exc:
        with pytest.raises(InfeasibleError) as err:
            solve_flooding(inst)
        assert err.value.max_blockable == exc.max_blockable
        return
    sol = solve_flooding(inst)
    assert sol.collateral_damage == expected.objective
    assert sol.residual_traffic <= cap and sol.filters_used <= f_max and non_overlapping(sol.filters)


@pytest.mark.parametrize("seed", range(40))
def test_root_table_monotone(seed):
    bad, good, f_max, cap = flooding_instance(seed)
    inst = FloodingInstance(bad, good, max(f_max, 1), cap)
    if not len(bad) and not len(good):
        return
    z = flooding_dp(inst.tree(), inst.f_max, cap).root_table()
    with np.errstate(invalid="ignore"):
        assert not (np.diff(z, axis=0) > 0).any()
        assert not (np.diff(z, axis=1) > 0).any()


@pytest.mark.parametrize("seed", range(40))
def test_expansion_keeps_damage(seed):
    bad, good, f_max, cap = flooding_instance(seed)
    inst = FloodingInstance(bad, good, f_max, cap)
    try:
        sol = solve_flooding(inst)
    except InfeasibleError:
        return
    tree = inst.tree()
    target = 4
    grown = expand_filters(tree, sol.filters, target)
    again = score(grown, bad, good, FLOODING)
    assert again.collateral_damage == sol.collateral_damage
    assert again.residual_traffic == sol.residual_traffic
    assert non_overlapping(grown)
    assert len(grown) == target or all(tree.find(p).left is None for p in grown)


def test_prices_and_forbidden_addresses():
    bad, good = small()
    inst = FloodingInstance(bad, good, 2, 20)
    free = solve_flooding(inst)
    covered = {a for p in free.filters for a in bad.entries if a in p}
    target = min(covered)
    banned = solve_flooding(inst, forbidden=[target])
    assert all(target not in p for p in banned.filters)
    # a large enough price has the same effect whenever avoiding the address is feasible
    priced = solve_flooding(inst, prices={target: 1e6})
    assert all(target not in p for p in priced.filters)
    assert priced.collateral_damage == banned.collateral_damage


def test_node_costs_add_prices():
    bad, good = small()
    tree = FloodingInstance(bad, good, 2, 20).tree()
    cost = node_costs(tree, {1: 0.5, 2: 0.25}, forbidden=[30])
    assert cost[tree.root] == np.inf
    assert cost[tree.leaf_index[1]] == 0.5
    assert cost[tree.leaf_index[3]] == 5.0


def test_max_blockable():
    bad, good = small()
    tree = FloodingInstance(bad, good, 1, 0).tree()
    assert max_blockable(tree, 1) == 55
    assert max_blockable(tree, 0) == 0


def test_instance_validation():
    bad, good = small()
    with pytest.raises(InputError):
        FloodingInstance(bad, good, -1, 3)
    with pytest.raises(InputError):
        FloodingInstance(bad, good, 1, -3)


def test_lagrangian_at_zero_blocks_nothing():
    bad, good = small()
    res = solve_flooding_lagrangian(FloodingInstance(bad, good, 2, 20), max_iters=1, fixed_lambda=True)
    (pt,) = res.trace
    assert pt.lam == 0 and pt.dual_value == pytest.approx(0.0)
    assert pt.subgradient == bad.total + good.total - 20


def test_lagrangian_with_ample_capacity():
    bad, good = small()
    res = solve_flooding_lagrangian(FloodingInstance(bad, good, 2, 100))
    assert res.dual_bound == 0 and res.best_primal.filters == ()
    assert res.trace[0].subgradient <= 0 and res.converged


@pytest.mark.parametrize("seed", range(60))
def test_weak_duality(seed):
    bad, good, f_max, cap = flooding_instance(seed)
    inst = FloodingInstance(bad, good, f_max, cap)
    try:
        opt = solve_flooding(inst).collateral_damage
    except InfeasibleError:
        return
    res = solve_flooding_lagrangian(inst, max_iters=60)
    assert all(pt.dual_value <= opt + 1e-9 for pt in res.trace)
    assert all(pt.lam >= 0 for pt in res.trace)
    if res.best_primal is not None:
        assert res.best_primal.collateral_damage >= opt
        assert res.best_primal.residual_traffic <= cap
    records = [pt.as_record() for pt in res.trace]
    assert set(records[0]) == {"k", "lambda", "dual_value", "subgradient", "capacity_feasible", "primal_cd"}


def test_diminishing_schedule():
    step = diminishing(2.0)
    assert [step(k) for k in range(3)] == [2.0, 1.0, 2.0 / 3.0]
