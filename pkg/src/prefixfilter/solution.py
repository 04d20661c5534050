"""Filter sets and their metrics, recomputed straight from the address sets."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import InputError
from .prefix import Prefix, format_prefix, non_overlapping
from .traffic import WeightedAddressSet

BLOCK_ALL = "block-all"
BLOCK_SOME = "block-some"
FLOODING = "flooding"
KINDS = (BLOCK_ALL, BLOCK_SOME, FLOODING)


@dataclass(frozen=True)
class FilterSolution:
    """A set of non-overlapping prefixes with the metrics they achieve.

    ``objective`` depends on the problem: collateral damage for
    ``block-all`` and ``flooding``, collateral damage minus blocked bad
    weight for ``block-some``.  ``residual_traffic`` is only meaningful for
    capacity problems.
    """

    filters: tuple[Prefix, ...]
    collateral_damage: int
    blocked_bad: int
    unblocked_bad_count: int
    objective: float
    kind: str = BLOCK_ALL
    residual_traffic: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def filters_used(self) -> int:
        return len(self.filters)

    def filter_strings(self) -> list[str]:
        return [format_prefix(p) for p in self.filters]

    def metrics(self) -> dict:
        out = {
            "collateral_damage": self.collateral_damage,
            "unblocked_bad_count": self.unblocked_bad_count,
            "blocked_bad": self.blocked_bad,
            "objective": self.objective,
            "filters_used": self.filters_used,
        }
        if self.residual_traffic is not None:
            out["residual_traffic"] = self.residual_traffic
        return out


class _Sums:
    def __init__(self, wset: WeightedAddressSet | None):
        if wset is None or not len(wset):
            self.addrs = np.zeros(0, dtype=np.int64)
            self.cum = np.zeros(1, dtype=np.int64)
        else:
            self.addrs, w = wset.sorted_arrays()
            self.cum = np.concatenate(([0], np.cumsum(w)))

    def over(self, lo, hi):
        i = np.searchsorted(self.addrs, lo, side="left")
        j = np.searchsorted(self.addrs, hi, side="right")
        return self.cum[j] - self.cum[i], j - i


def score(filters: Iterable[Prefix], bad: WeightedAddressSet, good: WeightedAddressSet | None,
          kind: str = BLOCK_ALL) -> FilterSolution:
    """Evaluate a filter set from scratch against the address sets.

    Raises :class:`InputError` if filters overlap or have the wrong width.
    """
    filters = tuple(sorted(filters))
    for p in filters:
        if p.width != bad.width:
            raise InputError(f"filter {p} does not match address width {bad.width}")
    if not non_overlapping(filters):
        raise InputError("filters overlap")
    gs, bs = _Sums(good), _Sums(bad)
    if filters:
        lo = np.array([p.base for p in filters], dtype=np.int64)
        hi = np.array([p.last for p in filters], dtype=np.int64)
        g, _ = gs.over(lo, hi)
        b, nb = bs.over(lo, hi)
        cd, blocked, covered = int(g.sum()), int(b.sum()), int(nb.sum())
    else:
        cd = blocked = covered = 0
    ubip = len(bad) - covered
    if kind == BLOCK_SOME:
        objective = cd - blocked
    elif kind in (BLOCK_ALL, FLOODING):
        objective = cd
    else:
        raise InputError(f"unknown problem kind {kind!r}")
    residual = None
    if kind == FLOODING:
        total = bad.total + (good.total if good is not None else 0)
        residual = total - blocked - cd
    return FilterSolution(filters, cd, blocked, ubip, objective, kind, residual)
