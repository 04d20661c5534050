"""DIST-FLOODING: several routers, each with its own traffic, budget and capacity.

No blacklist address may be filtered at more than one router.  That coupling
constraint is priced with one multiplier per blacklist address; for fixed
prices every router solves an ordinary FLOODING instance in which a filter
costs its local collateral damage plus the prices of the blacklist addresses
it covers.  A coordinator raises prices on addresses filtered twice, lowers
them (down to zero) on addresses nobody filters, and turns each round's
replies into a conflict-free assignment.

Rounds are synchronous: broadcast prices, collect replies, update prices.
Replies depend only on the broadcast prices, so router order and thread
count never change results.
"""
from __future__ import annotations

import configparser
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import islice, permutations
from pathlib import Path
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from .errors import InfeasibleError, InputError, ParseError
from .flooding import FloodingInstance, diminishing, solve_flooding
from .prefix import Prefix, format_prefix, non_overlapping
from .solution import FilterSolution
from .traffic import BAD, GOOD, WeightedAddressSet, load_address_set


@dataclass(frozen=True)
class RouterSpec:
    id: str
    f_max: int
    capacity: int
    good: WeightedAddressSet
    bad: WeightedAddressSet

    def __post_init__(self):
        if self.f_max < 0 or self.capacity < 0:
            raise InputError(f"router {self.id}: f_max and capacity must be >= 0")
        if self.good.width != self.bad.width:
            raise InputError(f"router {self.id}: good and bad widths differ")

    @property
    def instance(self) -> FloodingInstance:
        return FloodingInstance(self.bad, self.good, self.f_max, self.capacity)


class PriceVector:
    """Non-negative price per blacklist address; a prefix costs the sum over its addresses."""

    def __init__(self, addresses: Iterable[int], values: Iterable[float] | None = None):
        self.addresses = np.array(sorted(set(addresses)), dtype=np.int64)
        if values is None:
            self.values = np.zeros(len(self.addresses))
        else:
            self.values = np.asarray(list(values), dtype=np.float64)
            if self.values.shape != self.addresses.shape:
                raise InputError("one price per address required")
            if (self.values < 0).any():
                raise InputError("prices must be >= 0")
        self.values.setflags(write=False)

    def __len__(self):
        return len(self.addresses)

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.addresses.tolist(), self.values.tolist()))

    def positive(self) -> dict[int, float]:
        nz = np.flatnonzero(self.values > 0)
        return dict(zip(self.addresses[nz].tolist(), self.values[nz].tolist()))

    def of(self, prefix: Prefix) -> float:
        i, j = np.searchsorted(self.addresses, [prefix.base, prefix.last + 1])
        return float(self.values[i:j].sum())

    def total(self) -> float:
        return float(self.values.sum())

    def covered(self, filters: Iterable[Prefix]) -> frozenset[int]:
        out: set[int] = set()
        for p in filters:
            i, j = np.searchsorted(self.addresses, [p.base, p.last + 1])
            out.update(self.addresses[i:j].tolist())
        return frozenset(out)

    def updated(self, subgradient: np.ndarray, step: float) -> PriceVector:
        return PriceVector(self.addresses, np.maximum(0.0, self.values + step * subgradient))


def router_subproblem(router: RouterSpec, prices: PriceVector,
                      forbidden: Iterable[int] = ()) -> FilterSolution:
    """Exact FLOODING at one router with filter cost ``g + price``.

    ``extra['priced_cost']`` holds the subproblem value and ``extra['covered']``
    the blacklist addresses the chosen filters cover.
    """
    sol = solve_flooding(router.instance, prices=prices.positive(), forbidden=forbidden,
                         extra_addresses=prices.addresses.tolist())
    sol.extra["covered"] = prices.covered(sol.filters)
    return sol


@dataclass
class CoordinationRound:
    k: int
    prices: PriceVector
    replies: dict[str, FilterSolution]
    dual_value: float
    conflicts: frozenset[int]
    step: float = 0.0
    recovered: dict[str, FilterSolution] | None = None
    recovered_cd: int | None = None
    recovery_error: str | None = None

    def as_record(self) -> dict:
        return {
            "k": self.k,
            "dual_value": self.dual_value,
            "conflicts": len(self.conflicts),
            "price_total": self.prices.total(),
            "step": self.step,
            "primal_cd": self.recovered_cd,
            "recovery_error": self.recovery_error,
            "replies": {rid: sol.filter_strings() for rid, sol in self.replies.items()},
        }


@dataclass
class DistResult:
    assignments: dict[str, FilterSolution] | None
    objective: int | None
    dual_bound: float
    rounds: list[CoordinationRound] = field(default_factory=list)
    converged: bool = False

    @property
    def gap(self) -> float | None:
        if self.objective is None:
            return None
        return (self.objective - self.dual_bound) / max(1.0, abs(self.objective))

    def write_trace(self, fh: TextIO) -> None:
        for rnd in self.rounds:
            fh.write(json.dumps(rnd.as_record(), sort_keys=True) + "\n")


def _check_routers(routers: Sequence[RouterSpec], blacklist: WeightedAddressSet) -> None:
    if not routers:
        raise InputError("need at least one router")
    ids = [r.id for r in routers]
    if len(set(ids)) != len(ids):
        raise InputError("router ids must be unique")
    for r in routers:
        if r.bad.width != blacklist.width:
            raise InputError(f"router {r.id} width differs from the blacklist")


def assignment_violations(assignments: dict[str, FilterSolution], routers: Sequence[RouterSpec],
                          blacklist: WeightedAddressSet) -> list[str]:
    """Every broken budget, capacity, overlap or single-coverage rule; empty when feasible."""
    prices = PriceVector(blacklist.entries)
    out = []
    seen: dict[int, str] = {}
    for r in routers:
        sol = assignments.get(r.id)
        if sol is None:
            out.append(f"router {r.id}: no assignment")
            continue
        if sol.filters_used > r.f_max:
            out.append(f"router {r.id}: {sol.filters_used} filters > budget {r.f_max}")
        if sol.residual_traffic is None or sol.residual_traffic > r.capacity:
            out.append(f"router {r.id}: residual {sol.residual_traffic} > capacity {r.capacity}")
        if not non_overlapping(sol.filters):
            out.append(f"router {r.id}: overlapping filters")
        for a in prices.covered(sol.filters):
            if a in seen:
                out.append(f"address {a} filtered at {seen[a]} and {r.id}")
            seen[a] = r.id
    return out


def _benefit(router: RouterSpec, prices: PriceVector, p: Prefix) -> float:
    """Bad traffic a filter removes at its router, less its price."""
    bad = sum(w for a, w in router.bad.entries.items() if p.base <= a <= p.last)
    return bad - prices.of(p)


def _priority_order(rnd: CoordinationRound, routers: Sequence[RouterSpec]) -> list[str]:
    """Routers ranked by how much they gain from the conflicted addresses they filter."""
    gain = {}
    for r in routers:
        sol = rnd.replies[r.id]
        gain[r.id] = sum(_benefit(r, rnd.prices, p) for p in sol.filters
                         if any(a in p for a in rnd.conflicts))
    return sorted(gain, key=lambda rid: -gain[rid])


def _sequential(rnd: CoordinationRound, by_id: dict, order: Sequence[str],
                zero: PriceVector) -> dict[str, FilterSolution]:
    claimed: set[int] = set()
    out = {}
    for rid in order:
        sol = rnd.replies[rid]
        if sol.extra["covered"] & claimed:
            sol = router_subproblem(by_id[rid], zero, forbidden=claimed)
        out[rid] = sol
        claimed |= sol.extra["covered"]
    return out


def recover_primal(rnd: CoordinationRound, routers: Sequence[RouterSpec],
                   max_orders: int = 24) -> dict[str, FilterSolution]:
    """Turn one round's replies into an assignment with no address filtered twice.

    Routers are visited in priority order.  A router whose reply is disjoint
    from everything claimed so far keeps it; otherwise it re-solves plain
    FLOODING with the claimed addresses made unavailable.  The first order
    ranks routers by price-adjusted benefit (bad traffic removed minus price)
    on the conflicted addresses.  Further orders are tried, up to
    ``max_orders`` in all, and the cheapest feasible result is returned.
    Raises :class:`InfeasibleError` if no order works.
    """
    ids = [r.id for r in routers]
    if not rnd.conflicts:
        return dict(rnd.replies)
    by_id = {r.id: r for r in routers}
    zero = PriceVector(rnd.prices.addresses)
    first = _priority_order(rnd, routers)
    orders = [first] + [list(p) for p in islice(permutations(first), 1, max_orders)]
    best = None
    last_error = None
    for order in orders:
        try:
            cand = _sequential(rnd, by_id, order, zero)
        except InfeasibleError as exc:
            last_error = exc
            continue
        if best is None or _total_cd(cand) < _total_cd(best):
            best = cand
    if best is None:
        raise InfeasibleError(f"no router order recovers a feasible assignment: {last_error}",
                              max_blockable=last_error.max_blockable, required=last_error.required)
    return {rid: best[rid] for rid in ids}


def polish(assignments: dict[str, FilterSolution], routers: Sequence[RouterSpec],
           prices: PriceVector) -> dict[str, FilterSolution]:
    """Re-solve each router for pure collateral damage with the others' coverage held fixed.

    Each step keeps the assignment feasible and never raises its cost.
    """
    zero = PriceVector(prices.addresses)
    out = dict(assignments)
    for r in routers:
        others: set[int] = set()
        for rid, sol in out.items():
            if rid != r.id:
                others |= sol.extra["covered"]
        sol = router_subproblem(r, zero, forbidden=others)
        if sol.collateral_damage < out[r.id].collateral_damage:
            out[r.id] = sol
    return out


def _total_cd(assignments: dict[str, FilterSolution]) -> int:
    return sum(s.collateral_damage for s in assignments.values())


def coordinate(routers: Sequence[RouterSpec], blacklist: WeightedAddressSet, max_rounds: int = 100,
               step_schedule: Callable[[int], float] | None = None, eps: float = 1e-3,
               threads: int = 1) -> DistResult:
    """Projected subgradient on per-address prices, with primal recovery every round.

    Stops after ``max_rounds`` or once the relative gap between the best
    recovered assignment and the best dual value drops below ``eps``.
    Raises :class:`InfeasibleError` before the first round if some router
    cannot meet its capacity even alone.
    """
    routers = list(routers)
    _check_routers(routers, blacklist)
    prices = PriceVector(blacklist.entries)
    if step_schedule is None:
        goods = [w for r in routers for w in r.good.entries.values()]
        step_schedule = diminishing(max(1.0, float(np.mean(goods))) if goods else 1.0)

    def solve_all(pv: PriceVector) -> dict[str, FilterSolution]:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                sols = list(pool.map(lambda r: router_subproblem(r, pv), routers))
        else:
            sols = [router_subproblem(r, pv) for r in routers]
        return {r.id: s for r, s in zip(routers, sols)}

    try:
        replies = solve_all(prices)
    except InfeasibleError as exc:
        raise InfeasibleError(f"scenario infeasible: {exc}", max_blockable=exc.max_blockable,
                              required=exc.required) from None

    best: dict[str, FilterSolution] | None = None
    best_cd: int | None = None
    best_dual = -np.inf
    rounds: list[CoordinationRound] = []
    converged = False
    for k in range(max_rounds):
        if k:
            replies = solve_all(prices)
        counts = np.zeros(len(prices))
        for sol in replies.values():
            if sol.extra["covered"]:
                idx = np.searchsorted(prices.addresses, sorted(sol.extra["covered"]))
                counts[idx] += 1
        conflicts = frozenset(prices.addresses[counts > 1].tolist())
        dual = sum(s.extra["priced_cost"] for s in replies.values()) - prices.total()
        best_dual = max(best_dual, dual)
        step = step_schedule(k)
        rnd = CoordinationRound(k, prices, replies, dual, conflicts, step)
        try:
            rec = polish(recover_primal(rnd, routers), routers, prices)
            rnd.recovered, rnd.recovered_cd = rec, _total_cd(rec)
            if best_cd is None or rnd.recovered_cd < best_cd:
                best, best_cd = rec, rnd.recovered_cd
        except InfeasibleError as exc:
            rnd.recovery_error = str(exc)
        rounds.append(rnd)
        if best_cd is not None and best_cd - best_dual <= eps * max(1.0, abs(best_cd)):
            converged = True
            break
        sub = counts - 1.0
        nxt = prices.updated(sub, step)
        if np.array_equal(nxt.values, prices.values):
            # prices are stationary: no conflicts and every priced address is covered once
            converged = not conflicts
            break
        prices = nxt
    return DistResult(best, best_cd, float(best_dual), rounds, converged)


# -- scenario files ---------------------------------------------------------------

def load_routers(path, width: int | None = None) -> tuple[list[RouterSpec], WeightedAddressSet]:
    """Read an INI-style scenario: one ``[router ID]`` section per router.

    Each router section has ``f_max``, ``capacity``, ``good`` and ``bad``
    (file paths, relative to the scenario file).  An optional ``[global]``
    section may set ``width`` and a ``blacklist`` file; without it the
    blacklist is the union of the routers' bad sets.
    """
    path = Path(path)
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ParseError(f"bad scenario file: {exc}", source=str(path)) from None
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    base = path.parent
    glob = parser["global"] if parser.has_section("global") else {}
    try:
        width = width or int(glob.get("width", 32))
    except ValueError:
        raise ParseError("width must be an integer", source=str(path)) from None
    routers = []
    for name in parser.sections():
        if not name.startswith("router"):
            if name != "global":
                raise ParseError(f"unknown section [{name}]", source=str(path))
            continue
        rid = name[len("router"):].strip()
        sec = parser[name]
        try:
            f_max, capacity = sec.getint("f_max"), sec.getint("capacity")
            good_path, bad_path = sec["good"], sec["bad"]
        except (KeyError, ValueError) as exc:
            raise ParseError(f"router {rid!r}: {exc}", source=str(path)) from None
        if not rid or f_max is None or capacity is None:
            raise ParseError(f"router section [{name}] needs an id, f_max and capacity", source=str(path))
        routers.append(RouterSpec(
            rid, f_max, capacity,
            load_address_set(base / good_path, GOOD, width),
            load_address_set(base / bad_path, BAD, width)))
    if not routers:
        raise ParseError("no [router ...] sections", source=str(path))
    if "blacklist" in glob:
        blacklist = load_address_set(base / glob["blacklist"], BAD, width)
    else:
        merged: dict[int, int] = {}
        for r in routers:
            for a, w in r.bad.entries.items():
                merged[a] = merged.get(a, 0) + w
        blacklist = WeightedAddressSet(merged, BAD, width)
    return routers, blacklist


def assignment_record(assignments: dict[str, FilterSolution]) -> dict:
    return {rid: {"filters": [format_prefix(p) for p in sol.filters], **sol.metrics()}
            for rid, sol in assignments.items()}
