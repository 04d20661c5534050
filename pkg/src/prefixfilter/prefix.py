"""Address and prefix arithmetic over a configurable address width.

Addresses are plain ``int`` values in ``[0, 2**width)``.  A :class:`Prefix`
stores its base address with every bit below the prefix length cleared, so
``Prefix(0b0000, 2, 4)`` is the 4-bit prefix ``00**``.
"""
from __future__ import annotations

import ipaddress
from dataclasses import dataclass

from .errors import InputError, ParseError

MIN_WIDTH = 1
MAX_WIDTH = 32
IPV4_WIDTH = 32


def check_width(width: int) -> int:
    if not isinstance(width, int) or not MIN_WIDTH <= width <= MAX_WIDTH:
        raise InputError(f"address width must be in [{MIN_WIDTH}, {MAX_WIDTH}], got {width!r}")
    return width


def check_address(addr: int, width: int) -> int:
    if not isinstance(addr, int) or addr < 0 or addr >> width:
        raise InputError(f"address {addr!r} outside [0, 2^{width})")
    return addr


@dataclass(frozen=True, order=True)
class Prefix:
    base: int
    length: int
    width: int = IPV4_WIDTH

    def __post_init__(self):
        check_width(self.width)
        if not 0 <= self.length <= self.width:
            raise InputError(f"prefix length {self.length} outside [0, {self.width}]")
        check_address(self.base, self.width)
        if self.base & host_mask(self.length, self.width):
            raise InputError(f"prefix base {self.base} has bits set below length {self.length}")

    @classmethod
    def of(cls, addr: int, length: int, width: int = IPV4_WIDTH) -> Prefix:
        """The length-``length`` prefix containing ``addr``."""
        check_address(addr, width)
        return cls(addr & ~host_mask(length, width), length, width)

    @property
    def size(self) -> int:
        return 1 << (self.width - self.length)

    @property
    def last(self) -> int:
        return self.base + self.size - 1

    def __contains__(self, addr: int) -> bool:
        return self.base <= addr <= self.last

    def covers(self, other: Prefix) -> bool:
        """True if ``other`` lies inside this prefix (or equals it)."""
        return self.width == other.width and self.length <= other.length and other.base in self

    def overlaps(self, other: Prefix) -> bool:
        return self.covers(other) or other.covers(self)

    def children(self) -> tuple[Prefix, Prefix]:
        if self.length == self.width:
            raise InputError(f"{self} is a single address")
        half = self.size >> 1
        return (Prefix(self.base, self.length + 1, self.width),
                Prefix(self.base + half, self.length + 1, self.width))

    def parent(self) -> Prefix:
        if self.length == 0:
            raise InputError("the zero-length prefix has no parent")
        return Prefix.of(self.base, self.length - 1, self.width)

    def bits(self) -> str:
        """Binary pattern such as ``00**``."""
        head = format(self.base >> (self.width - self.length), f"0{self.length}b") if self.length else ""
        return head + "*" * (self.width - self.length)

    def __str__(self) -> str:
        return format_prefix(self)


def host_mask(length: int, width: int) -> int:
    return (1 << (width - length)) - 1


def contains(pfx: Prefix, addr: int, width: int | None = None) -> bool:
    """True iff the top ``pfx.length`` bits of ``addr`` match ``pfx``.

    ``width`` optionally names the address's width; a mismatch with the
    prefix's width is an input error.
    """
    if width is not None and width != pfx.width:
        raise InputError(f"width mismatch: prefix is {pfx.width}-bit, address is {width}-bit")
    check_address(addr, pfx.width)
    return (addr ^ pfx.base) >> (pfx.width - pfx.length) == 0


def common_length(a: int, b: int, width: int) -> int:
    """Number of leading bits shared by two ``width``-bit addresses."""
    return width - (a ^ b).bit_length()


def lcp(a: int, b: int, width: int = IPV4_WIDTH) -> Prefix:
    """Longest prefix containing both addresses."""
    check_width(width)
    check_address(a, width)
    check_address(b, width)
    return Prefix.of(a, common_length(a, b, width), width)


def parse_address(text: str, width: int = IPV4_WIDTH) -> int:
    """Parse a dotted quad (32-bit only), a decimal integer, or ``0b``/``0x`` literal."""
    text = text.strip()
    if not text:
        raise InputError("empty address")
    if "." in text:
        if width != IPV4_WIDTH:
            raise InputError(f"dotted-quad address {text!r} requires width 32, not {width}")
        try:
            return int(ipaddress.IPv4Address(text))
        except ipaddress.AddressValueError as exc:
            raise InputError(f"bad IPv4 address {text!r}: {exc}") from None
    try:
        value = int(text, 0)
    except ValueError:
        raise InputError(f"bad address {text!r}") from None
    return check_address(value, width)


def format_address(addr: int, width: int = IPV4_WIDTH) -> str:
    if width == IPV4_WIDTH:
        return str(ipaddress.IPv4Address(addr))
    return str(addr)


def parse_prefix(text: str, width: int | None = None) -> Prefix:
    """Parse ``a.b.c.d/l`` (32-bit) or ``<int>/<l>@W``.

    Bits below the prefix length must be zero; ``10.0.0.1/8`` is rejected.
    """
    raw = text.strip()
    body, at, wtext = raw.partition("@")
    if at:
        try:
            pwidth = int(wtext)
        except ValueError:
            raise ParseError(f"bad width in prefix {raw!r}") from None
    else:
        pwidth = IPV4_WIDTH
    if width is not None and pwidth != width:
        raise ParseError(f"prefix {raw!r} has width {pwidth}, expected {width}")
    addr_text, slash, len_text = body.partition("/")
    if not slash:
        raise ParseError(f"prefix {raw!r} lacks '/length'")
    try:
        length = int(len_text)
        base = parse_address(addr_text, pwidth)
        check_width(pwidth)
        return Prefix(base, length, pwidth)
    except (ValueError, InputError) as exc:
        raise ParseError(f"bad prefix {raw!r}: {exc}") from None


def format_prefix(pfx: Prefix) -> str:
    if pfx.width == IPV4_WIDTH:
        return f"{format_address(pfx.base)}/{pfx.length}"
    return f"{pfx.base}/{pfx.length}@{pfx.width}"


def non_overlapping(prefixes) -> bool:
    """True if no prefix in the collection covers another."""
    ordered = sorted(prefixes, key=lambda p: (p.base, p.length))
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.base <= prev.last:
            return False
    return True
