"""Exhaustive optima for small address spaces, and the K-means baseline.

The brute force never looks at an LCP tree.  It walks all ``2**(W+1) - 1``
prefixes, records which input addresses each one covers, and searches every
family of pairwise-disjoint coverage sets.  Two non-empty prefixes overlap
exactly when their coverage sets intersect, and two prefixes with the same
coverage are interchangeable, so deduplicating by coverage loses nothing.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import BudgetExceededError, InfeasibleError, InputError
from .prefix import Prefix, lcp
from .solution import BLOCK_ALL, BLOCK_SOME, FLOODING, FilterSolution, score
from .traffic import WeightedAddressSet


@dataclass(frozen=True)
class EnumerationBudget:
    max_width: int = 8
    max_f: int = 5
    max_routers: int = 2
    max_families: int = 5_000_000

    def check(self, width: int, f_max: int, candidates: int, routers: int = 1) -> int:
        """Upper bound on families to visit; refuses anything over budget."""
        if width > self.max_width:
            raise BudgetExceededError(f"width {width} exceeds enumeration limit {self.max_width}")
        if f_max > self.max_f:
            raise BudgetExceededError(f"f_max {f_max} exceeds enumeration limit {self.max_f}")
        if routers > self.max_routers:
            raise BudgetExceededError(f"{routers} routers exceed enumeration limit {self.max_routers}")
        bound = sum(comb(candidates, k) for k in range(min(f_max, candidates) + 1))
        if bound > self.max_families:
            raise BudgetExceededError(f"{bound} candidate families exceed limit {self.max_families}")
        return bound


DEFAULT_BUDGET = EnumerationBudget()


@dataclass(frozen=True)
class BruteForceResult:
    objective: float
    filters: tuple[Prefix, ...]
    families: int


def prefix_universe(width: int):
    for length in range(width + 1):
        step = 1 << (width - length)
        for base in range(0, 1 << width, step):
            yield Prefix(base, length, width)


def _coverage(width: int, addrs: list[int]) -> dict[int, list[Prefix]]:
    """Map coverage bitmask (bit k = ``addrs[k]``) to the prefixes producing it."""
    out: dict[int, list[Prefix]] = {}
    for p in prefix_universe(width):
        mask = 0
        for k, a in enumerate(addrs):
            if p.base <= a <= p.last:
                mask |= 1 << k
        if mask:
            out.setdefault(mask, []).append(p)
    return out


def _families(masks: list[int], f_max: int):
    """Yield every tuple of indices into ``masks`` that are pairwise disjoint, size <= f_max."""
    n = len(masks)

    def rec(start, used, chosen):
        yield chosen
        if len(chosen) == f_max:
            return
        for i in range(start, n):
            if not masks[i] & used:
                yield from rec(i + 1, used | masks[i], chosen + (i,))

    yield from rec(0, 0, ())


def brute_force(kind: str, bad: WeightedAddressSet, good: WeightedAddressSet | None, f_max: int,
                capacity: int | None = None, budget: EnumerationBudget = DEFAULT_BUDGET) -> BruteForceResult:
    """Exact optimum by exhaustive search.

    ``kind`` is ``block-all``, ``block-some`` or ``flooding``.  Raises
    :class:`InfeasibleError` when no family is feasible, and
    :class:`BudgetExceededError` rather than truncating a search.
    """
    width = bad.width
    good = good if good is not None else WeightedAddressSet.empty(width=width)
    if f_max < 0:
        raise InputError("f_max must be >= 0")
    if kind in (BLOCK_ALL, BLOCK_SOME):
        active = sorted(bad.entries)
    elif kind == FLOODING:
        if capacity is None or capacity < 0:
            raise InputError("flooding needs a capacity >= 0")
        active = sorted(set(bad.entries) | set(good.entries))
    else:
        raise InputError(f"unknown problem kind {kind!r}")
    budget.check(width, f_max, 0)
    cover = _coverage(width, active)
    gw = [good.weight(a) for a in active]
    bw = [bad.weight(a) for a in active]

    def mask_sum(mask, w):
        return sum(w[k] for k in range(len(active)) if mask >> k & 1)

    def good_inside(p):
        return sum(w for a, w in good.entries.items() if p.base <= a <= p.last)

    # per coverage set keep the cheapest prefix (smallest good weight, then shortest)
    cands = []
    for mask, prefixes in cover.items():
        if kind == FLOODING:
            p = min(prefixes, key=lambda q: (q.length, q.base))
            g = mask_sum(mask, gw)
        else:
            p = min(prefixes, key=lambda q: (good_inside(q), q.length, q.base))
            g = good_inside(p)
        b = mask_sum(mask, bw)
        cands.append((mask, p, g, b))
    cands.sort(key=lambda c: (c[1].length, c[1].base))
    masks = [c[0] for c in cands]
    n_fam = budget.check(width, f_max, len(cands))

    full = (1 << len(active)) - 1
    total = sum(bw) + sum(gw)
    best = None
    best_family = ()
    max_blocked = 0
    for fam in _families(masks, f_max):
        g = sum(cands[i][2] for i in fam)
        b = sum(cands[i][3] for i in fam)
        if kind == BLOCK_ALL:
            if sum(masks[i] for i in fam) != full:
                continue
            value = g
        elif kind == BLOCK_SOME:
            value = g - b
        else:
            blocked = g + b
            max_blocked = max(max_blocked, blocked)
            if total - blocked > capacity:
                continue
            value = g
        if best is None or value < best:
            best, best_family = value, fam
    if best is None:
        if kind == FLOODING:
            raise InfeasibleError(
                f"no {f_max}-filter set brings traffic {total} within capacity {capacity}",
                max_blockable=max_blocked, required=total - capacity)
        raise InfeasibleError(f"no {f_max}-filter set covers every bad address")
    return BruteForceResult(best, tuple(sorted(cands[i][1] for i in best_family)), n_fam)


def router_families(width: int, bl_addrs: list[int], good: WeightedAddressSet, bad: WeightedAddressSet,
                    f_max: int, capacity: int, budget: EnumerationBudget = DEFAULT_BUDGET):
    """For one router: best collateral damage per blacklist-coverage mask.

    Returns ``{bl_mask: (cd, filters)}`` over all capacity-feasible families.
    Bit ``k`` of a mask is ``bl_addrs[k]``.
    """
    local = set(good.entries) | set(bad.entries)
    active = sorted(set(bl_addrs) | local)
    cover = _coverage(width, active)
    bl_pos = {a: k for k, a in enumerate(bl_addrs)}
    cands = []
    for mask, prefixes in cover.items():
        members = [active[k] for k in range(len(active)) if mask >> k & 1]
        g = sum(good.weight(a) for a in members)
        t = g + sum(bad.weight(a) for a in members)
        blm = 0
        for a in members:
            if a in bl_pos:
                blm |= 1 << bl_pos[a]
        p = min(prefixes, key=lambda q: (q.length, q.base))
        cands.append((mask, p, g, t, blm))
    budget.check(width, f_max, len(cands))
    total = good.total + bad.total
    masks = [c[0] for c in cands]
    best: dict[int, tuple[int, tuple]] = {}
    for fam in _families(masks, f_max):
        t = sum(cands[i][3] for i in fam)
        if total - t > capacity:
            continue
        g = sum(cands[i][2] for i in fam)
        blm = 0
        for i in fam:
            blm |= cands[i][4]
        if blm not in best or g < best[blm][0]:
            best[blm] = (g, tuple(sorted(cands[i][1] for i in fam)))
    return best


def brute_force_dist(routers, blacklist: WeightedAddressSet,
                     budget: EnumerationBudget = DEFAULT_BUDGET) -> BruteForceResult:
    """Joint optimum over routers: no blacklist address filtered at two routers."""
    routers = list(routers)
    if not routers:
        raise InputError("need at least one router")
    budget.check(blacklist.width, max(r.f_max for r in routers), 0, len(routers))
    bl = sorted(blacklist.entries)
    if len(bl) > 20:
        raise BudgetExceededError("blacklist too large for joint enumeration")
    # dp[mask] = best total CD using routers so far with blacklist coverage exactly mask
    dp = {0: (0, ())}
    for r in routers:
        fams = router_families(blacklist.width, bl, r.good, r.bad, r.f_max, r.capacity, budget)
        if not fams:
            raise InfeasibleError(f"router {r.id} has no feasible filter set")
        nxt: dict[int, tuple] = {}
        for m1, (v1, f1) in dp.items():
            for m2, (v2, f2) in fams.items():
                if m1 & m2:
                    continue
                m, v = m1 | m2, v1 + v2
                if m not in nxt or v < nxt[m][0]:
                    nxt[m] = (v, f1 + ((r.id, f2),))
        dp = nxt
        if not dp:
            raise InfeasibleError("no joint assignment satisfies single coverage")
    value, assignment = min(dp.values(), key=lambda x: x[0])
    return BruteForceResult(value, assignment, len(dp))


# -- K-means baseline ---------------------------------------------------------

def _lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int = 200) -> np.ndarray:
    labels = None
    for _ in range(max_iter):
        bounds = (centers[:-1] + centers[1:]) / 2.0
        new = np.searchsorted(bounds, x, side="right")
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        counts = np.bincount(labels, minlength=len(centers))
        sums = np.bincount(labels, weights=x, minlength=len(centers))
        nonempty = counts > 0
        centers = centers.copy()
        centers[nonempty] = sums[nonempty] / counts[nonempty]
        centers.sort()
    return labels


def _cluster_prefixes(x_int: list[int], labels: np.ndarray, width: int) -> list[Prefix]:
    lo: dict[int, int] = {}
    hi: dict[int, int] = {}
    for a, lab in zip(x_int, labels.tolist()):
        if lab not in lo:
            lo[lab] = a
        hi[lab] = a
    covering = sorted({lcp(lo[k], hi[k], width) for k in lo}, key=lambda p: (p.base, p.length))
    merged: list[Prefix] = []
    for p in covering:
        if merged and merged[-1].covers(p):
            continue
        while merged and p.covers(merged[-1]):
            merged.pop()
        merged.append(p)
    return merged


def kmeans_filters(bad: WeightedAddressSet, good: WeightedAddressSet | None, f_max: int,
                   restarts: int = 50, seed: int = 0) -> FilterSolution:
    """Lloyd's 1-D K-means on address values, each cluster lifted to its covering prefix.

    ``k = f_max``; nested covering prefixes are merged into the outer one.
    The restart with the lowest collateral damage is returned.
    """
    if f_max < 1:
        raise InputError("k-means needs f_max >= 1")
    if restarts < 1:
        raise InputError("restarts must be >= 1")
    width = bad.width
    addrs = sorted(bad.entries)
    if not addrs:
        return score((), bad, good, BLOCK_ALL)
    if f_max >= len(addrs):
        return score([Prefix(a, width, width) for a in addrs], bad, good, BLOCK_ALL)
    x = np.array(addrs, dtype=np.float64)
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        centers = np.sort(rng.choice(x, size=f_max, replace=False))
        labels = _lloyd(x, centers)
        sol = score(_cluster_prefixes(addrs, labels, width), bad, good, BLOCK_ALL)
        if best is None or sol.collateral_damage < best.collateral_damage:
            best = sol
    return best


__all__ = [
    "EnumerationBudget", "BruteForceResult", "brute_force", "brute_force_dist", "router_families",
    "kmeans_filters", "prefix_universe",
]
