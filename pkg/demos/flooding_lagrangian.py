"""
Shedding load to fit a link
===========================

A victim's uplink is offered 55 units but can only take 20.  We want the
fewest legitimate units dropped, using at most two filters, and compare
the exact answer with what a Lagrangian price on capacity can certify.
"""
from prefixfilter import BAD, GOOD, FloodingInstance, InfeasibleError, WeightedAddressSet
from prefixfilter import solve_flooding, solve_flooding_lagrangian

bad = WeightedAddressSet({1: 10, 2: 10, 17: 10, 30: 10}, BAD, 5)
good = WeightedAddressSet({3: 5, 16: 5, 24: 5}, GOOD, 5)
inst = FloodingInstance(bad, good, f_max=2, capacity=20)
print("offered traffic:", inst.t0)

# The pseudo-polynomial DP gives the exact optimum.
exact = solve_flooding(inst)
print("exact:", exact.filter_strings(), "damage", exact.collateral_damage,
      "residual", exact.residual_traffic)

# Pricing capacity turns the problem into a series of unconstrained tree DPs.
res = solve_flooding_lagrangian(inst, max_iters=40)
for pt in res.trace[:8]:
    print(f"  k={pt.k:2d}  lambda={pt.lam:.4f}  dual={pt.dual_value:7.3f}  feasible={pt.capacity_feasible}")
print("dual bound:", round(res.dual_bound, 3), " best primal damage:",
      None if res.best_primal is None else res.best_primal.collateral_damage)

# With no filters allowed the solver reports exactly how short it falls.
try:
    solve_flooding(FloodingInstance(bad, good, f_max=0, capacity=10))
except InfeasibleError as err:
    print("infeasible:", err.max_blockable, "blockable of", err.required, "required")
