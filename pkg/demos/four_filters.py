"""
Block every bad host in a 16-address space
==========================================

Nine of the sixteen 4-bit addresses are malicious and the other seven are
legitimate clients.  With room for only four ACL rules, which prefixes
should the router deny?
"""
from prefixfilter import BAD, BLOCK_ALL, GOOD, Prefix, WeightedAddressSet
from prefixfilter import brute_force, score, solve_block_all, tree_for

bad_hosts = [0, 3, 4, 5, 7, 8, 10, 11, 12]
bad = WeightedAddressSet.from_addresses(bad_hosts, BAD, 4)
good = WeightedAddressSet.from_addresses([a for a in range(16) if a not in bad_hosts], GOOD, 4)

# The search space is the longest-common-prefix tree over the blacklist.
tree = tree_for(bad, good)
for node in tree.nodes():
    print(f"{tree.prefix(node)!s:>8}  good={node.good}  bad={node.bad}")

# Solve exactly for four filters.
sol = solve_block_all(bad, good, 4)
print("\nfilters:", ", ".join(sol.filter_strings()))
print("collateral damage:", sol.collateral_damage)

# An obvious hand-made answer is also feasible, just one client worse.
naive = [Prefix(0, 2, 4), Prefix(4, 2, 4), Prefix(8, 2, 4), Prefix(12, 4, 4)]
print("hand-made set damage:", score(naive, bad, good, BLOCK_ALL).collateral_damage)

# Enumerating every family of four prefixes agrees with the tree DP.
print("exhaustive optimum:", brute_force(BLOCK_ALL, bad, good, 4).objective)
