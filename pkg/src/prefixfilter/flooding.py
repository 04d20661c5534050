"""FLOODING: minimum collateral damage subject to a filter budget and a link capacity.

The exact solver is a pseudo-polynomial DP over the LCP tree of all traffic
sources (bad and good).  ``Z[p][f, c]`` is the least cost inside ``p`` using
at most ``f`` filters while leaving at most ``c`` traffic unblocked there.
Every traffic source is a leaf, so a node's traffic is exactly the traffic of
its two children and the capacity splits cleanly between them.

The Lagrangian relaxation prices the capacity constraint and leaves a
BLOCK-SOME instance per multiplier value; it gives lower bounds and, when an
iterate happens to fit the capacity, primal solutions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .block import BLOCK_SOME, block_dp
from .errors import InfeasibleError, InputError
from .lcptree import LcpNode, LcpTree, RangeSum, tree_for
from .minplus import INF, minplus2d
from .prefix import Prefix
from .solution import FLOODING, FilterSolution, score
from .traffic import WeightedAddressSet


@dataclass(frozen=True)
class FloodingInstance:
    bad: WeightedAddressSet
    good: WeightedAddressSet
    f_max: int
    capacity: int

    def __post_init__(self):
        if self.f_max < 0:
            raise InputError("f_max must be >= 0")
        if self.capacity < 0:
            raise InputError("capacity must be >= 0")
        if self.good.width != self.bad.width:
            raise InputError("good and bad sets have different widths")

    @property
    def t0(self) -> int:
        return self.bad.total + self.good.total

    @property
    def width(self) -> int:
        return self.bad.width

    def tree(self, extra: Iterable[int] = ()) -> LcpTree:
        return tree_for(self.bad, self.good, include_good=True, extra=extra)


def _capacity_of(node: LcpNode, capacity: int) -> int:
    return min(capacity, node.good + node.bad)


@dataclass
class FloodingTable:
    """Per-node ``Z[f, c]`` tables and the node costs used to build them."""

    tree: LcpTree
    f_max: int
    capacity: int
    z: dict
    cost: dict

    def root_table(self) -> np.ndarray:
        if self.tree.root is None:
            return np.zeros((self.f_max + 1, 1))
        return self.z[self.tree.root]

    def value(self, f: int | None = None, c: int | None = None) -> float:
        f = self.f_max if f is None else f
        c = self.capacity if c is None else c
        root = self.tree.root
        if root is None:
            return 0.0
        zr = self.z[root]
        return float(zr[min(f, zr.shape[0] - 1), min(c, zr.shape[1] - 1)])

    def filter_nodes(self, f: int | None = None, c: int | None = None) -> list[LcpNode]:
        """Backtrack one optimal filter set by re-deriving each node's choice."""
        f = self.f_max if f is None else f
        c = self.capacity if c is None else c
        root = self.tree.root
        if root is None or not np.isfinite(self.value(f, c)):
            return []
        out = []
        stack = [(root, min(f, self.z[root].shape[0] - 1), min(c, self.z[root].shape[1] - 1))]
        while stack:
            node, fb, cb = stack.pop()
            target = self.z[node][fb, cb]
            if fb >= 1 and self.cost[node] <= target:
                out.append(node)
                continue
            if node.left is None:
                continue
            zl, zr = self.z[node.left], self.z[node.right]
            found = None
            for n in range(min(fb, zr.shape[0] - 1) + 1):
                fl = fb - n
                if fl >= zl.shape[0]:
                    continue
                m_lo = max(0, cb - (zl.shape[1] - 1))
                m_hi = min(cb, zr.shape[1] - 1)
                if m_lo > m_hi:
                    continue
                ms = np.arange(m_lo, m_hi + 1)
                vals = zl[fl, cb - ms] + zr[n, ms]
                hit = np.flatnonzero(vals == target)
                if hit.size:
                    found = (n, int(ms[hit[0]]))
                    break
            if found is None:
                raise AssertionError("backtracking lost the optimal split")
            n, m = found
            stack.append((node.right, n, m))
            stack.append((node.left, fb - n, cb - m))
        return out

    def filters(self, f: int | None = None, c: int | None = None) -> list[Prefix]:
        return [self.tree.prefix(n) for n in self.filter_nodes(f, c)]


def node_costs(tree: LcpTree, prices: dict[int, float] | None = None,
               forbidden: Iterable[int] = ()) -> dict:
    """Cost of filtering each node: good weight plus summed address prices.

    Nodes containing a ``forbidden`` address cost ``inf``.
    """
    nodes = list(tree.nodes())
    if not nodes:
        return {}
    lo = np.fromiter((n.base for n in nodes), dtype=np.int64, count=len(nodes))
    hi = np.fromiter((tree.last(n) for n in nodes), dtype=np.int64, count=len(nodes))
    cost = np.array([n.good for n in nodes], dtype=np.float64)
    if prices:
        keys = list(prices)
        rs = RangeSum(keys, [prices[k] for k in keys], dtype=np.float64)
        cost = cost + rs.query_many(lo, hi)
    forbidden = list(forbidden)
    if forbidden:
        rs = RangeSum(forbidden, np.ones(len(forbidden), dtype=np.int64))
        cost[rs.query_many(lo, hi) > 0] = INF
    return dict(zip(nodes, cost.tolist()))


def flooding_dp(tree: LcpTree, f_max: int, capacity: int, cost: dict | None = None) -> FloodingTable:
    """Fill ``Z[p][f, c]`` bottom-up for ``f <= min(f_max, leaves)`` and ``c <= min(C, t_p)``."""
    if f_max < 0 or capacity < 0:
        raise InputError("f_max and capacity must be >= 0")
    cost = cost if cost is not None else node_costs(tree)
    z: dict = {}
    for node in tree.nodes():
        df = min(f_max, node.leaves)
        dc = _capacity_of(node, capacity)
        t = node.good + node.bad
        if node.left is None:
            table = np.full((df + 1, dc + 1), INF)
            if t <= capacity:
                table[:, t:] = 0.0
        else:
            table = minplus2d(z[node.left], z[node.right])[:df + 1, :dc + 1]
            if table.shape != (df + 1, dc + 1):
                raise AssertionError("child tables too small")
            table = np.ascontiguousarray(table)
        if df >= 1:
            np.minimum(table[1:], cost[node], out=table[1:])
        z[node] = table
    return FloodingTable(tree, f_max, capacity, z, cost)


def max_blockable(tree: LcpTree, f_max: int, cost: dict | None = None) -> int:
    """Most traffic any ``f_max`` non-overlapping filters can remove.

    Nodes with infinite cost are treated as unusable.
    """
    if tree.root is None or f_max == 0:
        return 0
    usable = (lambda n: -(n.good + n.bad)) if cost is None else \
        (lambda n: -(n.good + n.bad) if np.isfinite(cost[n]) else INF)
    table = block_dp(tree, BLOCK_SOME, f_max, cost=usable)
    return int(round(-table.value(f_max)))


def solve_flooding(instance: FloodingInstance, prices: dict[int, float] | None = None,
                   forbidden: Iterable[int] = (), extra_addresses: Iterable[int] = ()) -> FilterSolution:
    """Exact FLOODING optimum.

    ``prices`` adds a per-address charge to every filter covering that
    address, and ``forbidden`` addresses may not be covered at all (both used
    by the multi-router decomposition).  ``extra_addresses`` are zero-traffic
    addresses that must still be distinguishable in the tree.

    Raises :class:`InfeasibleError` with the best achievable reduction when
    no admissible filter set fits the capacity.
    """
    inst = instance
    forbidden = set(forbidden)
    extra = set(extra_addresses) | forbidden | (set(prices) if prices else set())
    if inst.t0 <= inst.capacity and not prices:
        sol = score((), inst.bad, inst.good, FLOODING)
        return _with_cost(sol, 0.0)
    if not len(inst.bad) and not len(inst.good) and not extra:
        return _with_cost(score((), inst.bad, inst.good, FLOODING), 0.0)
    tree = inst.tree(extra)
    cost = node_costs(tree, prices, forbidden)
    table = flooding_dp(tree, inst.f_max, inst.capacity, cost)
    value = table.value()
    if not np.isfinite(value):
        best = max_blockable(tree, inst.f_max, cost)
        raise InfeasibleError(
            f"at most {best} of {inst.t0} traffic can be blocked with {inst.f_max} filters; "
            f"capacity {inst.capacity} needs {inst.t0 - inst.capacity}",
            max_blockable=best, required=inst.t0 - inst.capacity)
    sol = score(table.filters(), inst.bad, inst.good, FLOODING)
    return _with_cost(sol, value)


def _with_cost(sol: FilterSolution, priced: float) -> FilterSolution:
    sol.extra["priced_cost"] = priced
    return sol


def expand_filters(tree: LcpTree, filters: Iterable[Prefix], target: int) -> list[Prefix]:
    """Split filters into their two LCP-tree children until ``target`` are used.

    On a tree over every traffic source the split blocks the same addresses,
    so a feasible set stays feasible with unchanged collateral damage.
    Stops early once every filter is a leaf.
    """
    current = []
    for p in filters:
        node = tree.find(p)
        if node is None:
            raise InputError(f"filter {p} is not a node of the tree")
        current.append(node)
    while len(current) < target:
        splittable = [n for n in current if n.left is not None]
        if not splittable:
            break
        node = min(splittable, key=lambda n: (n.length, n.base))
        current.remove(node)
        current.extend((node.left, node.right))
    return sorted(tree.prefix(n) for n in current)


# -- Lagrangian relaxation ------------------------------------------------------

@dataclass(frozen=True)
class TracePoint:
    k: int
    lam: float
    dual_value: float
    subgradient: float
    capacity_feasible: bool
    primal_cd: int | None
    step: float

    def as_record(self) -> dict:
        return {"k": self.k, "lambda": self.lam, "dual_value": self.dual_value,
                "subgradient": self.subgradient, "capacity_feasible": self.capacity_feasible,
                "primal_cd": self.primal_cd}


@dataclass
class LagrangianResult:
    dual_bound: float
    best_primal: FilterSolution | None
    trace: list[TracePoint] = field(default_factory=list)
    converged: bool = False


def diminishing(alpha0: float) -> Callable[[int], float]:
    """Step schedule ``alpha0 / (1 + k)``."""
    return lambda k: alpha0 / (1.0 + k)


def solve_flooding_lagrangian(instance: FloodingInstance, max_iters: int = 100,
                              step_schedule: Callable[[int], float] | None = None,
                              lam0: float = 0.0, fixed_lambda: bool = False) -> LagrangianResult:
    """Projected subgradient ascent on the capacity multiplier.

    For multiplier ``lam`` the inner problem filters prefix ``p`` at cost
    ``(1 - lam) g_p - lam b_p`` under the budget and non-overlap rules, and
    the dual value adds the constant ``lam (t0 - C)``.  Every iterate that
    fits the capacity is a primal candidate; the cheapest is kept.
    ``fixed_lambda`` skips the multiplier update.
    """
    inst = instance
    t0, cap = inst.t0, inst.capacity
    step_schedule = step_schedule or diminishing(1.0 / (t0 + 1))
    if not len(inst.bad) and not len(inst.good):
        return LagrangianResult(0.0, score((), inst.bad, inst.good, FLOODING), [], True)
    tree = inst.tree()
    nodes = list(tree.nodes())
    good = np.array([n.good for n in nodes], dtype=np.float64)
    bad = np.array([n.bad for n in nodes], dtype=np.float64)
    lam = max(0.0, lam0)
    best_dual = -INF
    best: FilterSolution | None = None
    trace = []
    converged = False
    for k in range(max_iters):
        weights = (1.0 - lam) * good - lam * bad
        cost = dict(zip(nodes, weights.tolist()))
        table = block_dp(tree, BLOCK_SOME, inst.f_max, cost=cost.__getitem__)
        chosen = table.filter_nodes()
        blocked = sum(n.good + n.bad for n in chosen)
        sub = float(t0 - blocked - cap)
        dual = table.value() + lam * (t0 - cap)
        best_dual = max(best_dual, dual)
        feasible = sub <= 0
        cd = None
        if feasible:
            sol = score([tree.prefix(n) for n in chosen], inst.bad, inst.good, FLOODING)
            cd = sol.collateral_damage
            if best is None or cd < best.collateral_damage:
                best = sol
        alpha = step_schedule(k)
        trace.append(TracePoint(k, lam, dual, sub, feasible, cd, alpha))
        if best is not None and best.collateral_damage - best_dual <= 1e-9 * max(1.0, abs(best_dual)):
            converged = True
            break
        if fixed_lambda:
            break
        new_lam = max(0.0, lam + alpha * sub)
        if new_lam == lam:
            converged = sub == 0 or (lam == 0 and sub <= 0)
            if converged:
                break
        lam = new_lam
    return LagrangianResult(best_dual, best, trace, converged)
