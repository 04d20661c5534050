"""Incremental BLOCK-ALL / BLOCK-SOME as the blacklist changes over time.

Inserting an address adds one leaf and at most one internal node to the LCP
tree; removing one drops the leaf and its parent.  Either way only tables on
the path to the root go stale, so each operation costs ``O(depth * F)``
instead of a full rebuild.  Large batches fall back to rebuilding once the
batch size reaches ``N / log2(N)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, TextIO

from .block import BLOCK_ALL, BLOCK_SOME, DpTable, block_dp, node_table
from .errors import InputError, ParseError
from .lcptree import LcpNode, LcpTree, annotate, build_lcp_tree
from .prefix import check_address, check_width, format_address, format_prefix, parse_address
from .solution import FilterSolution, score
from .traffic import BAD, GOOD, WeightedAddressSet

INCREMENTAL = "incremental"
REBUILD = "rebuild"


@dataclass(frozen=True)
class ChangeReport:
    """What one insert or remove did to the tree and the objective.

    ``new_nodes`` and ``removed_nodes`` list internal nodes only; the leaf is
    the operation's own address.
    """

    op: str
    address: int
    new_nodes: tuple = ()
    removed_nodes: tuple = ()
    recomputed_node_count: int = 0
    objective_before: float = 0.0
    objective_after: float = 0.0
    filters_kept: bool = False
    warning: str | None = None

    def as_record(self, width: int) -> dict:
        rec = {
            "op": self.op,
            "address": format_address(self.address, width),
            "new_nodes": [format_prefix(p) for p in self.new_nodes],
            "removed_nodes": [format_prefix(p) for p in self.removed_nodes],
            "recomputed_node_count": self.recomputed_node_count,
            "objective_before": self.objective_before,
            "objective_after": self.objective_after,
        }
        if self.warning:
            rec["warning"] = self.warning
        return rec


@dataclass(frozen=True)
class BatchReport:
    path: str
    size_before: int
    ops: int
    threshold: float
    objective_before: float
    objective_after: float
    reports: tuple[ChangeReport, ...] = field(default=())


def batch_path(n: int, k: int) -> tuple[str, float]:
    """Incremental iff ``k < n / log2(n)``; tiny states always rebuild."""
    if n <= 1:
        return REBUILD, 0.0
    threshold = n / math.log2(n)
    return (INCREMENTAL if k < threshold else REBUILD), threshold


class DynamicSolverState:
    """Blacklist, its annotated LCP tree, per-node DP tables and the current solution.

    Single writer.  :attr:`solution` returns an immutable snapshot, so
    readers may hold it across later operations.
    """

    def __init__(self, kind: str, f_max: int, width: int = 32,
                 bad: WeightedAddressSet | Mapping[int, int] | None = None,
                 good: WeightedAddressSet | None = None):
        if kind not in (BLOCK_ALL, BLOCK_SOME):
            raise InputError(f"dynamic maintenance supports block-all/block-some, not {kind!r}")
        if kind == BLOCK_ALL and f_max < 1:
            raise InputError("block-all needs f_max >= 1")
        if f_max < 0:
            raise InputError("f_max must be >= 0")
        check_width(width)
        self.kind = kind
        self.f_max = f_max
        self.width = width
        self.good = good if good is not None else WeightedAddressSet.empty(width=width)
        if self.good.width != width:
            raise InputError("good set width does not match")
        entries = dict(bad.entries if isinstance(bad, WeightedAddressSet) else (bad or {}))
        clash = entries.keys() & self.good.entries.keys()
        if clash:
            raise InputError(f"addresses both good and bad: {sorted(clash)[:5]}")
        self.bad: dict[int, int] = {}
        self.op_counter = 0
        self.rebuilds = 0
        self._rebuild(entries)

    # -- bookkeeping -----------------------------------------------------------

    def _rebuild(self, entries: Mapping[int, int]) -> None:
        bad = WeightedAddressSet(dict(entries), BAD, self.width)
        self.bad = dict(bad.entries)
        if entries:
            self.tree = annotate(build_lcp_tree(entries, self.width), self.good, bad)
        else:
            self.tree = annotate(LcpTree(None, self.width, {}), self.good, None)
        table = block_dp(self.tree, self.kind, self.f_max)
        self.z, self.split = table.z, table.split
        self._kept: tuple | None = None
        self._snapshot: FilterSolution | None = None
        self.op_counter = 0
        self.rebuilds += 1

    def _recompute_up(self, node: LcpNode | None) -> int:
        count = 0
        while node is not None:
            node_table(self.kind, node, self.f_max, self.z, self.split)
            count += 1
            node = node.parent
        return count

    @property
    def table(self) -> DpTable:
        return DpTable(self.tree, self.kind, self.f_max, self.z, self.split)

    @property
    def objective(self) -> float:
        return self.table.value()

    def bad_set(self) -> WeightedAddressSet:
        return WeightedAddressSet(dict(self.bad), BAD, self.width)

    @property
    def solution(self) -> FilterSolution:
        if self._snapshot is None:
            filters = self._kept if self._kept is not None else self.table.filters()
            self._snapshot = score(filters, self.bad_set(), self.good, self.kind)
        return self._snapshot

    def __len__(self):
        return len(self.bad)

    def fresh_objective(self) -> float:
        """Objective of a from-scratch solve on the current sets."""
        if not self.bad:
            return 0.0
        tree = annotate(build_lcp_tree(self.bad, self.width), self.good, self.bad_set())
        return block_dp(tree, self.kind, self.f_max).value()

    # -- operations ------------------------------------------------------------

    def _check_new(self, addr: int, weight: int) -> None:
        check_address(addr, self.width)
        if isinstance(weight, bool) or int(weight) != weight or weight < 0:
            raise InputError(f"weight must be a non-negative integer, got {weight!r}")
        if addr in self.good:
            raise InputError(f"address {format_address(addr, self.width)} is in the good set")

    def insert(self, addr: int, weight: int = 1) -> ChangeReport:
        addr = int(addr)
        self._check_new(addr, weight)
        before = self.objective
        if addr in self.bad:
            return ChangeReport("insert", addr, objective_before=before, objective_after=before,
                                filters_kept=True, warning="duplicate insert ignored")
        current = self._kept if self._kept is not None else tuple(self.table.filters())
        covered = any(addr in p for p in current)
        leaf, inner = self.tree.insert(addr, int(weight))
        self.bad[addr] = int(weight)
        self.tree.bad_weights[addr] = int(weight)
        count = self._recompute_up(leaf)
        # a filter that already covers the address stays optimal
        self._kept = current if covered else None
        self._snapshot = None
        self.op_counter += 1
        new = (self.tree.prefix(inner),) if inner is not None else ()
        return ChangeReport("insert", addr, new, (), count, before, self.objective, covered)

    def remove(self, addr: int) -> ChangeReport:
        addr = int(addr)
        if addr not in self.bad:
            raise InputError(f"address {format_address(addr, self.width)} is not in the blacklist")
        before = self.objective
        leaf, parent = self.tree.remove(addr)
        del self.bad[addr]
        self.tree.bad_weights.pop(addr, None)
        for node in (leaf, parent):
            if node is not None:
                self.z.pop(node, None)
                self.split.pop(node, None)
        removed = ()
        count = 0
        if parent is not None:
            removed = (self.tree.prefix(parent),)
            sibling = parent.left if parent.left is not leaf else parent.right
            count = self._recompute_up(sibling.parent)
        self._kept = None
        self._snapshot = None
        self.op_counter += 1
        return ChangeReport("remove", addr, (), removed, count, before, self.objective)

    def apply_batch(self, inserts: Iterable = (), removes: Iterable[int] = (),
                    force: str | None = None) -> BatchReport:
        """Apply a validated batch, incrementally or by rebuilding.

        ``inserts`` holds addresses or ``(address, weight)`` pairs.  The whole
        batch is checked before anything changes.  ``force`` overrides the
        path choice (used to compare the two paths).
        """
        ins: dict[int, int] = {}
        for item in inserts:
            addr, w = (item if isinstance(item, tuple) else (item, 1))
            addr = int(addr)
            self._check_new(addr, w)
            if addr in ins:
                raise InputError(f"address {format_address(addr, self.width)} inserted twice")
            if addr in self.bad:
                raise InputError(f"address {format_address(addr, self.width)} already in the blacklist")
            ins[addr] = int(w)
        rem: list[int] = []
        for addr in removes:
            addr = int(addr)
            if addr in ins or addr in rem:
                raise InputError(f"conflicting operations on {format_address(addr, self.width)}")
            if addr not in self.bad:
                raise InputError(f"address {format_address(addr, self.width)} is not in the blacklist")
            rem.append(addr)
        n, k = len(self.bad), len(ins) + len(rem)
        path, threshold = batch_path(n, k)
        if force is not None:
            if force not in (INCREMENTAL, REBUILD):
                raise InputError(f"unknown batch path {force!r}")
            path = force
        before = self.objective
        reports: list[ChangeReport] = []
        if path == INCREMENTAL:
            reports += [self.remove(a) for a in rem]
            reports += [self.insert(a, w) for a, w in ins.items()]
        else:
            entries = {a: w for a, w in self.bad.items() if a not in set(rem)}
            entries.update(ins)
            self._rebuild(entries)
        return BatchReport(path, n, k, threshold, before, self.objective, tuple(reports))

    def set_good(self, good: WeightedAddressSet) -> int:
        """Replace the whitelist; recompute only nodes whose good weight changed.

        Returns the number of recomputed nodes.
        """
        if good.width != self.width:
            raise InputError("good set width does not match")
        clash = good.entries.keys() & self.bad.keys()
        if clash:
            raise InputError(f"addresses both good and bad: {sorted(clash)[:5]}")
        old = {n: n.good for n in self.tree.nodes()}
        self.good = good
        annotate(self.tree, good, self.bad_set())
        dirty = set()
        for node, g in old.items():
            if node.good != g:
                while node is not None and node not in dirty:
                    dirty.add(node)
                    node = node.parent
        count = 0
        for node in self.tree.nodes():
            if node in dirty:
                node_table(self.kind, node, self.f_max, self.z, self.split)
                count += 1
        self._kept = None
        self._snapshot = None
        return count


# -- snapshot files ---------------------------------------------------------------

def dump_state(state: DynamicSolverState, fh: TextIO) -> None:
    """Write the sets and settings; the tree is rebuilt on load."""
    fh.write(f"kind={state.kind}\nf_max={state.f_max}\nwidth={state.width}\n")
    for title, entries in (("good", state.good.entries), ("bad", state.bad)):
        fh.write(f"[{title}]\n")
        for addr in sorted(entries):
            fh.write(f"{format_address(addr, state.width)},{entries[addr]}\n")


def load_state(fh: TextIO, source: str = "<state>") -> DynamicSolverState:
    settings: dict[str, str] = {}
    sections: dict[str, dict[int, int]] = {"good": {}, "bad": {}}
    current = None
    for lineno, raw in enumerate(fh, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in ("[good]", "[bad]"):
            current = sections[line[1:-1]]
            continue
        if current is None:
            key, sep, value = line.partition("=")
            if not sep:
                raise ParseError("expected key=value", lineno, 1, source)
            settings[key.strip()] = value.strip()
            continue
        text, _, weight = line.partition(",")
        width = int(settings.get("width", 32))
        try:
            addr = parse_address(text.strip(), width)
            current[addr] = current.get(addr, 0) + int(weight or 1)
        except ValueError as exc:
            raise ParseError(str(exc), lineno, 1, source) from None
    try:
        kind, f_max, width = settings["kind"], int(settings["f_max"]), int(settings["width"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"missing or bad setting: {exc}", source=source) from None
    good = WeightedAddressSet(sections["good"], GOOD, width)
    return DynamicSolverState(kind, f_max, width, bad=sections["bad"], good=good)
