"""
Two routers, one blacklist
==========================

Two edge routers each face part of the same attack.  Each must fit its own
link, and no blacklisted host should be filtered twice.  Prices on shared
hosts let the routers settle who filters what.
"""
from prefixfilter import BAD, GOOD, RouterSpec, WeightedAddressSet, brute_force_dist, coordinate

W = 6
blacklist = WeightedAddressSet.from_addresses([1, 2, 9, 40, 41], BAD, W)
east = RouterSpec("east", 2, 8,
                  WeightedAddressSet({3: 2, 12: 1}, GOOD, W),
                  WeightedAddressSet({1: 8, 2: 6, 9: 4}, BAD, W))
west = RouterSpec("west", 2, 3,
                  WeightedAddressSet({0: 3, 43: 1}, GOOD, W),
                  WeightedAddressSet({1: 5, 40: 4, 41: 4}, BAD, W))

# Coordinate: each round prices conflicts and every router re-solves locally.
res = coordinate([east, west], blacklist)
for rnd in res.rounds[:6]:
    print(f"round {rnd.k}: dual {rnd.dual_value:6.2f}  conflicts {sorted(rnd.conflicts)}")

for rid, sol in res.assignments.items():
    print(f"{rid}: {sol.filter_strings()} damage {sol.collateral_damage} residual {sol.residual_traffic}")
print("total damage", res.objective, "dual bound", round(res.dual_bound, 3))

# Small enough to check against joint enumeration.
print("joint optimum:", brute_force_dist([east, west], blacklist).objective)
