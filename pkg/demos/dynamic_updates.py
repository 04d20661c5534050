"""
Keeping filters fresh as the blacklist moves
============================================

New attackers appear and old ones go quiet.  Rather than re-solving from
scratch, the solver repairs only the tables along one root path.
"""
from prefixfilter import BLOCK_ALL, GOOD, DynamicSolverState, WeightedAddressSet

blacklist = [3, 10, 15, 17, 22, 31, 32, 33, 57, 58]
good = WeightedAddressSet.from_addresses([a for a in range(64) if a not in blacklist + [37]], GOOD, 6)
state = DynamicSolverState(BLOCK_ALL, 3, 6, bad={a: 1 for a in blacklist}, good=good)
print("start:", [str(p) for p in state.solution.filters], "damage", state.objective)

# One insertion adds one internal node and touches only its ancestors.
rep = state.insert(37)
print("insert 37: new node", [str(p) for p in rep.new_nodes],
      "tables recomputed", rep.recomputed_node_count, "of", len(list(state.tree.nodes())))
print("after:", [str(p) for p in state.solution.filters], "damage", state.objective)

# A removal collapses the parent and repairs from the grandparent upward.
rep = state.remove(10)
print("remove 10: dropped", [str(p) for p in rep.removed_nodes], "damage", state.objective)

# Batches pick the incremental path only while they stay small next to n / log2(n).
batch = state.apply_batch([10], [57, 58])
print("batch of", batch.ops, "on", batch.size_before, "addresses:", batch.path,
      f"(threshold {batch.threshold:.2f})")
print("matches a fresh solve:", state.objective == state.fresh_objective())
