"""Exact tree DP for BLOCK-ALL and BLOCK-SOME.

For a node ``p`` and budget ``F``, ``z[p][F]`` is the best objective inside
``p`` using at most ``F`` filters.  Siblings are merged with a min-plus
convolution; a node may also be filtered as a whole with one filter.
Tables are truncated at ``min(f_max, leaves(p))`` entries since extra
filters cannot help beyond one per leaf.

Backtracking stores one code per (node, F): ``-1`` filter this node,
``-2`` use nothing, ``j >= 0`` give ``j`` filters to the right child and the
rest to the left.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import InfeasibleError, InputError
from .lcptree import LcpNode, LcpTree, tree_for
from .minplus import INF, minplus
from .solution import BLOCK_ALL, BLOCK_SOME, FilterSolution, score
from .traffic import WeightedAddressSet

EMIT = -1
NOTHING = -2

_LEAF_ALL = (np.array([INF, 0.0]), np.array([0, EMIT]))


def _default_cost(node: LcpNode):
    return node.good - node.bad


def node_table(kind: str, node: LcpNode, f_max: int, z: dict, split: dict,
               cost: Callable[[LcpNode], float] | None = None) -> None:
    """Compute ``z[node]`` and ``split[node]`` from the children's tables."""
    delta = min(f_max, node.leaves)
    if node.left is None:
        if kind == BLOCK_ALL:
            zt, st = _LEAF_ALL[0][:delta + 1], _LEAF_ALL[1][:delta + 1]
        else:
            c = (cost or _default_cost)(node)
            zt = np.array([0.0, min(0.0, c)])[:delta + 1]
            st = np.array([0, EMIT if c < 0 else NOTHING])[:delta + 1]
        z[node], split[node] = zt, st
        return
    conv, j = minplus(z[node.left], z[node.right])
    zt = conv[:delta + 1].copy()
    st = j[:delta + 1].copy()
    if kind == BLOCK_ALL:
        c = node.good
        mask = c <= zt[1:]
    else:
        c = (cost or _default_cost)(node)
        # a zero-gain filter ties with filtering nothing; leave it out
        mask = (c <= zt[1:]) if c < 0 else np.zeros(len(zt) - 1, dtype=bool)
    zt[1:][mask] = c
    st[1:][mask] = EMIT
    z[node], split[node] = zt, st


@dataclass
class DpTable:
    """Per-node objective arrays and backtracking codes for one tree."""

    tree: LcpTree
    kind: str
    f_max: int
    z: dict
    split: dict

    def root_values(self, upto: int | None = None) -> np.ndarray:
        """``z_root(F)`` for ``F = 0..upto`` (held flat past the table end)."""
        upto = self.f_max if upto is None else upto
        if self.tree.root is None:
            return np.zeros(upto + 1)
        zr = self.z[self.tree.root]
        if upto < len(zr):
            return zr[:upto + 1].copy()
        return np.concatenate((zr, np.full(upto + 1 - len(zr), zr[-1])))

    def value(self, f: int | None = None) -> float:
        f = self.f_max if f is None else f
        if self.tree.root is None:
            return 0.0
        zr = self.z[self.tree.root]
        return float(zr[min(f, len(zr) - 1)])

    def filter_nodes(self, f: int | None = None) -> list[LcpNode]:
        f = self.f_max if f is None else f
        root = self.tree.root
        if root is None:
            return []
        out = []
        stack = [(root, min(f, len(self.z[root]) - 1))]
        while stack:
            node, budget = stack.pop()
            if budget <= 0:
                continue
            code = int(self.split[node][budget])
            if code == EMIT:
                out.append(node)
            elif code >= 0 and node.left is not None:
                stack.append((node.right, code))
                stack.append((node.left, budget - code))
        return out

    def filters(self, f: int | None = None):
        return [self.tree.prefix(n) for n in self.filter_nodes(f)]


def block_dp(tree: LcpTree, kind: str, f_max: int,
             cost: Callable[[LcpNode], float] | None = None) -> DpTable:
    """Run the bottom-up DP over every node of ``tree``."""
    if kind not in (BLOCK_ALL, BLOCK_SOME):
        raise InputError(f"block_dp handles block-all/block-some, not {kind!r}")
    if f_max < 0:
        raise InputError("f_max must be >= 0")
    z: dict = {}
    split: dict = {}
    for node in tree.nodes():
        node_table(kind, node, f_max, z, split, cost)
    return DpTable(tree, kind, f_max, z, split)


def _check_sets(bad: WeightedAddressSet, good: WeightedAddressSet | None):
    if good is not None and good.width != bad.width:
        raise InputError("good and bad sets have different widths")


def solve_block_all(bad: WeightedAddressSet, good: WeightedAddressSet | None, f_max: int) -> FilterSolution:
    """Cover every bad address with at most ``f_max`` prefixes, minimizing good weight blocked."""
    _check_sets(bad, good)
    if not len(bad):
        return score((), bad, good, BLOCK_ALL)
    if f_max < 1:
        raise InfeasibleError(f"cannot cover {len(bad)} bad addresses with {f_max} filters")
    table = block_dp(tree_for(bad, good), BLOCK_ALL, f_max)
    return score(table.filters(), bad, good, BLOCK_ALL)


def solve_block_some(bad: WeightedAddressSet, good: WeightedAddressSet | None, f_max: int) -> FilterSolution:
    """Minimize blocked good weight minus blocked bad weight with at most ``f_max`` prefixes."""
    _check_sets(bad, good)
    if f_max < 0:
        raise InputError("f_max must be >= 0")
    if not len(bad) or f_max == 0:
        return score((), bad, good, BLOCK_SOME)
    table = block_dp(tree_for(bad, good), BLOCK_SOME, f_max)
    return score(table.filters(), bad, good, BLOCK_SOME)


@dataclass(frozen=True)
class SweepRow:
    f: int
    collateral_damage: int | None
    unblocked_bad_count: int | None
    objective: float | None
    filters_used: int = 0

    @property
    def feasible(self) -> bool:
        return self.objective is not None


def sweep_filters(kind: str, bad: WeightedAddressSet, good: WeightedAddressSet | None,
                  f_range: Iterable[int]) -> list[SweepRow]:
    """One DP pass at the largest budget, then read off every ``F`` in ``f_range``."""
    _check_sets(bad, good)
    fs = sorted(set(f_range))
    if not fs:
        return []
    if fs[0] < 0:
        raise InputError("filter budgets must be >= 0")
    rows = []
    if not len(bad):
        sol = score((), bad, good, kind)
        return [SweepRow(f, sol.collateral_damage, sol.unblocked_bad_count, sol.objective) for f in fs]
    table = block_dp(tree_for(bad, good), kind, fs[-1])
    for f in fs:
        if kind == BLOCK_ALL and f < 1:
            rows.append(SweepRow(f, None, None, None))
            continue
        sol = score(table.filters(f), bad, good, kind)
        rows.append(SweepRow(f, sol.collateral_damage, sol.unblocked_bad_count, sol.objective,
                             sol.filters_used))
    return rows
