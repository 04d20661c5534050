"""Blacklists, whitelists and synthetic clustered workloads."""
from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

from .errors import InputError, ParseError
from .prefix import IPV4_WIDTH, Prefix, check_address, check_width, format_address, parse_address

GOOD = "good"
BAD = "bad"


@dataclass(frozen=True)
class WeightedAddressSet:
    """Addresses with non-negative integer weights.

    The role (``"good"`` or ``"bad"``) says how the weight is read: collateral
    damage for good addresses, blocking benefit for bad ones.  ``clusters``
    records the seed prefixes when the set came from a generator.
    """

    entries: Mapping[int, int]
    role: str = BAD
    width: int = IPV4_WIDTH
    clusters: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.role not in (GOOD, BAD):
            raise InputError(f"role must be 'good' or 'bad', got {self.role!r}")
        check_width(self.width)
        clean = {}
        for addr, w in self.entries.items():
            check_address(addr, self.width)
            if isinstance(w, bool) or not isinstance(w, (int, np.integer)):
                raise InputError(f"weight of {addr} must be an integer, got {w!r}")
            if w < 0:
                raise InputError(f"negative weight {w} for address {addr}")
            clean[int(addr)] = int(w)
        object.__setattr__(self, "entries", clean)

    @classmethod
    def from_addresses(cls, addrs: Iterable[int], role=BAD, width=IPV4_WIDTH, weight=1):
        """Build a set with one weight per address; duplicates are summed."""
        entries: dict[int, int] = {}
        for a in addrs:
            a = int(a)
            entries[a] = entries.get(a, 0) + weight
        return cls(entries, role, width)

    @classmethod
    def empty(cls, role=GOOD, width=IPV4_WIDTH):
        return cls({}, role, width)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, addr):
        return addr in self.entries

    def __iter__(self):
        return iter(sorted(self.entries))

    def weight(self, addr: int) -> int:
        return self.entries.get(addr, 0)

    @property
    def total(self) -> int:
        return sum(self.entries.values())

    def sorted_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Addresses in ascending order and their weights, as int64 arrays."""
        if not self.entries:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        addrs = np.fromiter(self.entries.keys(), dtype=np.int64, count=len(self.entries))
        weights = np.fromiter(self.entries.values(), dtype=np.int64, count=len(self.entries))
        order = np.argsort(addrs, kind="stable")
        return addrs[order], weights[order]

    def scaled(self, factor: int) -> WeightedAddressSet:
        return replace(self, entries={a: w * factor for a, w in self.entries.items()})

    def with_entries(self, entries: Mapping[int, int]) -> WeightedAddressSet:
        return replace(self, entries=dict(entries), clusters=())

    def union(self, other: WeightedAddressSet) -> WeightedAddressSet:
        if other.width != self.width:
            raise InputError("cannot merge sets of different widths")
        merged = dict(self.entries)
        for a, w in other.entries.items():
            merged[a] = merged.get(a, 0) + w
        return replace(self, entries=merged, clusters=())


@dataclass(frozen=True)
class ScenarioConfig:
    width: int = IPV4_WIDTH
    f_max: int = 1
    capacity: int | None = None
    weight_ratio: float = 1.0
    seed: int = 0
    # generator parameters
    bad_n: int = 0
    bad_clusters: int = 1
    good_n: int = 0
    good_clusters: int = 1
    good_weights: str = "constant:1"
    cluster_lengths: tuple[int, int] | None = None

    def __post_init__(self):
        check_width(self.width)
        if self.f_max < 0:
            raise InputError("f_max must be >= 0")
        if self.capacity is not None and self.capacity < 0:
            raise InputError("capacity must be >= 0")
        if not self.weight_ratio > 0:
            raise InputError("weight_ratio must be > 0")


# 20 servers x 1,000 good connections/s x 5 KB each = 100,000 KB/s of good
# traffic, spread over 20,000 one-connection sources of weight 5 (KB/s).
PRESETS = {
    "dshield-like": ScenarioConfig(
        width=32, f_max=1000, weight_ratio=2.0 ** 10, seed=0,
        bad_n=10_000, bad_clusters=50,
        good_n=20_000, good_clusters=20, good_weights="constant:5",
    ),
}


def _parse_line(line: str, lineno: int, role: str, width: int, source) -> tuple[int, int] | None:
    body = line.split("#", 1)[0].strip()
    if not body:
        return None
    addr_text, comma, w_text = body.partition(",")
    try:
        addr = parse_address(addr_text, width)
    except InputError as exc:
        col = line.find(addr_text.strip()) + 1
        raise ParseError(str(exc), lineno, col, source) from None
    weight = 1
    if comma:
        col = line.find(",") + 2
        try:
            weight = int(w_text.strip())
        except ValueError:
            raise ParseError(f"bad weight {w_text.strip()!r}", lineno, col, source) from None
        if weight < 0:
            raise ParseError(f"negative weight {weight}", lineno, col, source)
    return addr, weight


def load_address_set(source, role: str = BAD, width: int = IPV4_WIDTH) -> WeightedAddressSet:
    """Read ``address[,weight]`` lines from a path, a text stream, or a string.

    ``#`` starts a comment.  Repeated addresses have their weights summed.
    """
    name = None
    if isinstance(source, os.PathLike) or (isinstance(source, str) and "\n" not in source
                                           and os.path.exists(source)):
        name = os.fspath(source)
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    entries: dict[int, int] = {}
    for lineno, line in enumerate(io.StringIO(text), start=1):
        parsed = _parse_line(line, lineno, role, width, name)
        if parsed is None:
            continue
        addr, w = parsed
        entries[addr] = entries.get(addr, 0) + w
    return WeightedAddressSet(entries, role, width)


def dump_address_set(wset: WeightedAddressSet, fh) -> None:
    for addr in sorted(wset.entries):
        fh.write(f"{format_address(addr, wset.width)},{wset.entries[addr]}\n")


def load_scenario_config(path) -> ScenarioConfig:
    """Read a flat ``key = value`` preset file into a :class:`ScenarioConfig`."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.read_string("[scenario]\n" + text, source=os.fspath(path))
    raw = dict(parser["scenario"])
    base = PRESETS.get(raw.pop("preset", ""), ScenarioConfig())
    ints = {"width", "f_max", "capacity", "seed", "bad_n", "bad_clusters", "good_n", "good_clusters"}
    kwargs = {}
    for key, value in raw.items():
        if key in ints:
            kwargs[key] = int(value)
        elif key == "weight_ratio":
            kwargs[key] = float(value)
        elif key == "good_weights":
            kwargs[key] = value
        elif key == "cluster_lengths":
            lo, hi = (int(x) for x in value.replace("..", ",").split(","))
            kwargs[key] = (lo, hi)
        else:
            raise InputError(f"unknown scenario key {key!r} in {path}")
    return replace(base, **kwargs)


# -- generators ---------------------------------------------------------------

def _default_lengths(width: int, n: int, clusters: int) -> tuple[int, int]:
    # clusters must be roomy enough to hold their share of addresses
    per_cluster = max(1, -(-n // clusters))
    room = max(1, (per_cluster * 4 - 1).bit_length())
    hi = max(0, width - room)
    lo = max(0, min(hi, width // 2, hi - 8))
    return lo, hi


def _cluster_prefixes(rng, width, clusters, lengths):
    lo, hi = lengths
    out = []
    for _ in range(clusters):
        length = int(rng.integers(lo, hi + 1))
        base = int(rng.integers(0, 1 << width)) & ~((1 << (width - length)) - 1)
        out.append(Prefix(base, length, width))
    return out


def _cascade_sample(rng, pfx: Prefix, bias: float, count: int) -> np.ndarray:
    """Draw addresses inside ``pfx`` from a biased binomial cascade."""
    free = pfx.width - pfx.length
    if free == 0:
        return np.full(count, pfx.base, dtype=np.int64)
    bits = (rng.random((count, free)) < bias).astype(np.int64)
    shifts = np.arange(free - 1, -1, -1, dtype=np.int64)
    return pfx.base + (bits << shifts).sum(axis=1)


def _clustered(config: ScenarioConfig, n: int, clusters: int, rng, exclude=(), lengths=None,
               prefixes=()):
    width = config.width
    if n > (1 << width) - len(exclude):
        raise InputError(f"cannot draw {n} unique addresses from a {width}-bit space")
    if n < 0 or clusters < 1 or (n and clusters > n):
        raise InputError("need n >= clusters >= 1")
    if n == 0:
        return [], ()
    lengths = lengths or config.cluster_lengths or _default_lengths(width, n, clusters)
    cl = list(prefixes)[:clusters]
    cl += _cluster_prefixes(rng, width, clusters - len(cl), lengths)
    biases = rng.uniform(0.1, 0.9, size=clusters)
    # every cluster gets at least one address, the rest are spread at random
    shares = np.ones(clusters, dtype=np.int64)
    if n > clusters:
        shares += rng.multinomial(n - clusters, np.full(clusters, 1.0 / clusters))
    excluded = set(exclude)
    chosen: dict[int, None] = {}
    for idx, pfx in enumerate(cl):
        want, got, bias = int(shares[idx]), 0, biases[idx]
        for attempt in range(32):
            if got == want:
                break
            if attempt == 8:
                # strongly biased cascades saturate; continue uniformly inside the cluster
                bias = 0.5
            for a in _cascade_sample(rng, pfx, bias, 2 * (want - got) + 4).tolist():
                if a not in chosen and a not in excluded:
                    chosen[a] = None
                    got += 1
                    if got == want:
                        break
    # any shortfall (saturated clusters) is drawn uniformly from the whole space
    while len(chosen) < n:
        a = int(rng.integers(0, 1 << width))
        if a not in chosen and a not in excluded:
            chosen[a] = None
    return list(chosen), tuple(cl)


def gen_clustered_blacklist(config: ScenarioConfig, n: int, clusters: int, lengths=None,
                            exclude=()) -> WeightedAddressSet:
    """``n`` unique bad addresses drawn from ``clusters`` random prefixes, unit weight."""
    rng = np.random.default_rng([config.seed, 1])
    addrs, cl = _clustered(config, n, clusters, rng, exclude, lengths)
    return WeightedAddressSet({a: 1 for a in addrs}, BAD, config.width, cl)


def _weights(spec: str, rng, n: int) -> np.ndarray:
    kind, _, args = spec.partition(":")
    params = [float(x) for x in args.split(":") if x]
    if kind == "constant":
        return np.full(n, int(params[0]) if params else 1, dtype=np.int64)
    if kind == "pareto":
        alpha = params[0] if params else 1.5
        scale = params[1] if len(params) > 1 else 1.0
        return np.maximum(1, np.floor(scale * (1.0 + rng.pareto(alpha, n)))).astype(np.int64)
    if kind == "zipf":
        a = params[0] if params else 2.0
        cap = int(params[1]) if len(params) > 1 else 10_000
        return np.minimum(rng.zipf(a, n), cap).astype(np.int64)
    if kind == "geometric":
        p = params[0] if params else 0.3
        return rng.geometric(p, n).astype(np.int64)
    raise InputError(f"unknown weight distribution {spec!r}")


def gen_good_traffic(config: ScenarioConfig, n: int, clusters: int, weights: str | None = None,
                     exclude=(), lengths=None, prefixes=()) -> WeightedAddressSet:
    """Clustered good sources with integer weights from a named distribution.

    ``weights`` is ``constant:k``, ``pareto:alpha[:scale]``, ``zipf:a[:cap]`` or
    ``geometric:p``.  Addresses in ``exclude`` (normally the blacklist) are
    never drawn.  ``prefixes`` pins the first clusters to given prefixes, for
    instance the blacklist's own clusters when good and bad sources share
    networks; the remaining clusters are random.
    """
    rng = np.random.default_rng([config.seed, 2])
    addrs, cl = _clustered(config, n, clusters, rng, set(exclude), lengths, prefixes)
    w = _weights(weights or config.good_weights, rng, len(addrs))
    return WeightedAddressSet(dict(zip(addrs, w.tolist())), GOOD, config.width, cl)


def generate_scenario(config: ScenarioConfig) -> tuple[WeightedAddressSet, WeightedAddressSet]:
    """Disjoint (bad, good) sets for a preset."""
    bad = gen_clustered_blacklist(config, config.bad_n, config.bad_clusters)
    good = gen_good_traffic(config, config.good_n, config.good_clusters, exclude=bad.entries.keys())
    return bad, good
