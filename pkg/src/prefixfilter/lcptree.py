"""Longest-common-prefix trees.

The LCP tree of an address set is the binary trie of those addresses with
every single-child node spliced out: leaves are the addresses themselves and
each internal node is the longest common prefix of the leaves beneath it.
Every solver in this package searches over its nodes.
"""
from __future__ import annotations

from bisect import bisect_left
from typing import Iterable, Iterator

import numpy as np

from .errors import InputError
from .prefix import Prefix, check_address, check_width, common_length, host_mask
from .traffic import GOOD, BAD, WeightedAddressSet


class RangeSum:
    """Sums of per-address values over address intervals."""

    def __init__(self, addrs=None, values=None, dtype=np.int64):
        if addrs is None or len(addrs) == 0:
            self.addrs = np.zeros(0, dtype=np.int64)
            self.cum = np.zeros(1, dtype=dtype)
            return
        addrs = np.asarray(addrs, dtype=np.int64)
        values = np.asarray(values, dtype=dtype)
        order = np.argsort(addrs, kind="stable")
        self.addrs = addrs[order]
        self.cum = np.concatenate((np.zeros(1, dtype=dtype), np.cumsum(values[order])))

    @classmethod
    def of(cls, wset: WeightedAddressSet | None) -> RangeSum:
        if wset is None or not len(wset):
            return cls()
        return cls(*wset.sorted_arrays())

    def query(self, lo: int, hi: int):
        """Total over addresses in ``[lo, hi]``."""
        i = np.searchsorted(self.addrs, lo, side="left")
        j = np.searchsorted(self.addrs, hi, side="right")
        return (self.cum[j] - self.cum[i]).item()

    def query_many(self, lo, hi) -> np.ndarray:
        i = np.searchsorted(self.addrs, lo, side="left")
        j = np.searchsorted(self.addrs, hi, side="right")
        return self.cum[j] - self.cum[i]


class LcpNode:
    __slots__ = ("base", "length", "left", "right", "parent", "good", "bad", "leaves")

    def __init__(self, base, length, left=None, right=None, parent=None):
        self.base = base
        self.length = length
        self.left = left
        self.right = right
        self.parent = parent
        self.good = 0
        self.bad = 0
        self.leaves = 1 if left is None else left.leaves + right.leaves

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def traffic(self):
        return self.good + self.bad

    def prefix(self, width: int) -> Prefix:
        return Prefix(self.base, self.length, width)

    def __repr__(self):
        kind = "leaf" if self.is_leaf else "node"
        return f"<{kind} {self.base}/{self.length} g={self.good} b={self.bad} n={self.leaves}>"


class LcpTree:
    """An LCP tree plus the leaf index and (after :func:`annotate`) node weights.

    Nodes carry ``good`` (weight of good addresses anywhere inside the prefix,
    including those not represented as leaves), ``bad`` and ``leaves``.
    """

    def __init__(self, root: LcpNode | None, width: int, leaf_index: dict[int, LcpNode]):
        self.root = root
        self.width = width
        self.leaf_index = leaf_index
        self.good_sum = RangeSum()
        self.bad_weights: dict[int, int] = {}

    def __len__(self):
        return len(self.leaf_index)

    def prefix(self, node: LcpNode) -> Prefix:
        return Prefix(node.base, node.length, self.width)

    def last(self, node: LcpNode) -> int:
        return node.base + host_mask(node.length, self.width)

    def nodes(self) -> Iterator[LcpNode]:
        """Post-order traversal (children before parents)."""
        if self.root is None:
            return
        stack = [(self.root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded or node.left is None:
                yield node
            else:
                stack.append((node, True))
                stack.append((node.right, False))
                stack.append((node.left, False))

    def internal_nodes(self) -> list[LcpNode]:
        return [n for n in self.nodes() if n.left is not None]

    def depth(self, node: LcpNode) -> int:
        d = 0
        while node.parent is not None:
            node = node.parent
            d += 1
        return d

    def height(self) -> int:
        if self.root is None:
            return -1
        best = 0
        stack = [(self.root, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if node.left is not None:
                stack.append((node.left, d + 1))
                stack.append((node.right, d + 1))
        return best

    def find(self, pfx: Prefix) -> LcpNode | None:
        """The node whose prefix is exactly ``pfx``, if any."""
        node = self.root
        while node is not None:
            if node.length > pfx.length or common_length(node.base, pfx.base, self.width) < node.length:
                return None
            if node.length == pfx.length:
                return node
            if node.left is None:
                return None
            node = self._child_toward(node, pfx.base)
        return None

    def _child_toward(self, node: LcpNode, addr: int) -> LcpNode:
        bit = (addr >> (self.width - node.length - 1)) & 1
        return node.right if bit else node.left

    def signature(self) -> tuple:
        """Pre-order (base, length) listing; equal trees have equal signatures."""
        out = []
        stack = [self.root] if self.root is not None else []
        while stack:
            node = stack.pop()
            out.append((node.base, node.length))
            if node.left is not None:
                stack.append(node.right)
                stack.append(node.left)
        return tuple(out)

    # -- incremental maintenance ---------------------------------------------

    def insert(self, addr: int, weight: int = 1) -> tuple[LcpNode, LcpNode | None]:
        """Add a leaf; returns ``(leaf, new_internal_node_or_None)``.

        At most one internal node is created: the LCP of ``addr`` and the
        subtree it branches off from.  Weights on the leaf's ancestors are
        updated; callers recompute anything derived from them.
        """
        check_address(addr, self.width)
        if addr in self.leaf_index:
            raise InputError(f"address {addr} already present")
        leaf = LcpNode(addr, self.width)
        leaf.bad = weight
        leaf.good = self.good_sum.query(addr, addr)
        self.leaf_index[addr] = leaf
        if self.root is None:
            self.root = leaf
            return leaf, None
        node = self.root
        while True:
            shared = common_length(addr, node.base, self.width)
            if shared < node.length:
                break
            node = self._child_toward(node, addr)
        # splice a new internal node above ``node``
        parent = node.parent
        base = addr & ~host_mask(shared, self.width)
        if (addr >> (self.width - shared - 1)) & 1:
            inner = LcpNode(base, shared, node, leaf, parent)
        else:
            inner = LcpNode(base, shared, leaf, node, parent)
        inner.good = self.good_sum.query(base, base + host_mask(shared, self.width))
        inner.bad = node.bad + leaf.bad
        node.parent = inner
        leaf.parent = inner
        if parent is None:
            self.root = inner
        elif parent.left is node:
            parent.left = inner
        else:
            parent.right = inner
        up = parent
        while up is not None:
            up.bad += weight
            up.leaves += 1
            up = up.parent
        return leaf, inner

    def remove(self, addr: int) -> tuple[LcpNode, LcpNode | None]:
        """Drop a leaf and its parent, promoting the sibling.

        Returns ``(leaf, removed_parent_or_None)``.
        """
        leaf = self.leaf_index.pop(addr, None)
        if leaf is None:
            raise InputError(f"address {addr} not present")
        parent = leaf.parent
        if parent is None:
            self.root = None
            return leaf, None
        sibling = parent.right if parent.left is leaf else parent.left
        grand = parent.parent
        sibling.parent = grand
        if grand is None:
            self.root = sibling
        elif grand.left is parent:
            grand.left = sibling
        else:
            grand.right = sibling
        up = grand
        while up is not None:
            up.bad -= leaf.bad
            up.leaves -= 1
            up = up.parent
        leaf.parent = parent.parent = None
        return leaf, parent


def _build(addrs: list[int], lo: int, hi: int, width: int, index: dict) -> LcpNode:
    if hi - lo == 1:
        leaf = LcpNode(addrs[lo], width)
        index[addrs[lo]] = leaf
        return leaf
    a, b = addrs[lo], addrs[hi - 1]
    length = common_length(a, b, width)
    base = a & ~host_mask(length, width)
    mid = bisect_left(addrs, base | (1 << (width - length - 1)), lo, hi)
    left = _build(addrs, lo, mid, width, index)
    right = _build(addrs, mid, hi, width, index)
    node = LcpNode(base, length, left, right)
    left.parent = right.parent = node
    return node


def build_lcp_tree(addresses: Iterable[int], width: int) -> LcpTree:
    """Build the LCP tree of an address collection.

    Duplicates collapse to one leaf.  The result depends only on the set of
    addresses, never on their order.
    """
    check_width(width)
    addrs = sorted({check_address(int(a), width) for a in addresses})
    if not addrs:
        raise InputError("cannot build an LCP tree over an empty address set")
    index: dict[int, LcpNode] = {}
    root = _build(addrs, 0, len(addrs), width, index)
    return LcpTree(root, width, index)


def annotate(tree: LcpTree, good: WeightedAddressSet | None, bad: WeightedAddressSet | None) -> LcpTree:
    """Fill ``good``/``bad`` on every node from the full weighted sets.

    Good weight is summed over every good address inside a node's prefix,
    whether or not the address is a leaf of the tree.  Good and bad sets must
    be disjoint.
    """
    for wset, role in ((good, GOOD), (bad, BAD)):
        if wset is not None and wset.width != tree.width:
            raise InputError(f"{role} set is {wset.width}-bit, tree is {tree.width}-bit")
    if good is not None and bad is not None:
        clash = good.entries.keys() & bad.entries.keys()
        if clash:
            raise InputError(f"addresses both good and bad: {sorted(clash)[:5]}")
    tree.good_sum = RangeSum.of(good)
    tree.bad_weights = dict(bad.entries) if bad is not None else {}
    bad_sum = RangeSum.of(bad)
    nodes = list(tree.nodes())
    if not nodes:
        return tree
    lo = np.fromiter((n.base for n in nodes), dtype=np.int64, count=len(nodes))
    hi = lo + np.fromiter(((1 << (tree.width - n.length)) - 1 for n in nodes), dtype=np.int64,
                          count=len(nodes))
    for node, g, b in zip(nodes, tree.good_sum.query_many(lo, hi).tolist(),
                          bad_sum.query_many(lo, hi).tolist()):
        node.good = g
        node.bad = b
    return tree


def tree_for(bad: WeightedAddressSet, good: WeightedAddressSet | None = None,
             include_good: bool = False, extra: Iterable[int] = ()) -> LcpTree:
    """Annotated LCP tree over the blacklist (or blacklist plus whitelist)."""
    addrs = set(bad.entries)
    if include_good and good is not None:
        addrs |= good.entries.keys()
    addrs.update(extra)
    tree = build_lcp_tree(addrs, bad.width)
    return annotate(tree, good, bad)
