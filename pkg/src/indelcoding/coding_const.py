"""The constant-alphabet coding scheme.

Edges travel as variable-length bit descriptions ``(delta, s)``, where
``delta`` is the gap back to the sender round in which the grandparent edge
started transmitting.  Every entry of the sender's EdgeTable contributes one
bit per cycle; a cycle is cut into pages of ``page_capacity`` slots and each
page is one input symbol.

Wire layout of a page (an int): bit 0 is the last-page flag, and slot ``k``
occupies bits ``1+4k .. 4+4k`` holding, from low to high, the payload bit,
the live-points-exhausted flag, the fully-sent flag and the newly-added
flag.  Unused slots are zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from ._party import PartyBase, ProtocolConfig, StepInfo
from .metrics import as_fraction
from .pjp import ALICE, BOB, grandchild_index, resolve_grandchild, rootless_index

S_BITS = 3


# -- descriptions -----------------------------------------------------------


def encode_description(delta: int, s: int) -> tuple:
    """3 bits of ``s`` then the minimal big-endian binary of ``delta``."""
    if not 0 <= s <= 4:
        raise ValueError(f"s={s} outside 0..4")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    head = tuple(int(b) for b in format(s, "03b"))
    tail = tuple(int(b) for b in format(delta, "b")) if delta else ()
    return head + tail


def decode_description(bits) -> tuple:
    """Inverse of :func:`encode_description`; returns ``(delta, s)``."""
    bits = tuple(bits)
    if len(bits) < S_BITS:
        raise ValueError("description shorter than the s field")
    s = int("".join(map(str, bits[:S_BITS])), 2)
    if s > 4:
        raise ValueError(f"s={s} outside 0..4")
    tail = bits[S_BITS:]
    if tail and tail[0] == 0:
        raise ValueError("delta is not minimally encoded")
    delta = int("".join(map(str, tail)), 2) if tail else 0
    return delta, s


def encode_edge_description(edge, i: int, n: int, s: int = None) -> tuple:
    """Description of ``edge`` sent from round ``i`` linking back to round ``n``."""
    if not 0 <= n <= i:
        raise ValueError("need 0 <= n <= i")
    if edge is None:
        return encode_description(0, 0)
    if s is None:
        s = rootless_index(edge) if n == 0 else grandchild_index(edge[:-2], edge)
    return encode_description(i - n, s)


# -- pages ------------------------------------------------------------------


@dataclass(frozen=True)
class Slot:
    payload: int
    live_zero: int
    fully_sent: int
    newly_added: int


EMPTY_SLOT = Slot(0, 0, 0, 0)


@dataclass(frozen=True)
class ConstSymbol:
    last_page: int
    slots: tuple  # of Slot, at most page_capacity

    def pack(self, capacity: int) -> int:
        if len(self.slots) > capacity:
            raise ValueError("more slots than the page capacity")
        v = self.last_page
        for k, sl in enumerate(self.slots):
            base = 1 + 4 * k
            v |= sl.payload << base
            v |= sl.live_zero << (base + 1)
            v |= sl.fully_sent << (base + 2)
            v |= sl.newly_added << (base + 3)
        return v

    @classmethod
    def unpack(cls, value: int, capacity: int) -> "ConstSymbol":
        if value < 0 or value >> (1 + 4 * capacity):
            raise ValueError("symbol wider than the page layout")
        slots = tuple(
            Slot(*((value >> (1 + 4 * k + j)) & 1 for j in range(4))) for k in range(capacity)
        )
        return cls(value & 1, slots)


# -- the sender's table -----------------------------------------------------


@dataclass
class EdgeEntry:
    edge: tuple
    description: tuple
    sent_length: int
    live_points: int
    added_round: int


@dataclass
class EdgeTable:
    live_boost: int
    entries: list = field(default_factory=list)
    boosts: int = 0
    decrements: int = 0
    removed_points: int = 0

    def find(self, edge) -> Optional[EdgeEntry]:
        for en in self.entries:
            if en.edge == edge:
                return en
        return None

    def live_total(self) -> int:
        return sum(en.live_points for en in self.entries)

    def snapshot(self) -> list:
        return [(en.added_round, en.description[: en.sent_length]) for en in self.entries]


def maintain(table: EdgeTable) -> None:
    """Account for one finished cycle: every entry sent one bit."""
    for en in table.entries:
        en.live_points -= 1
        en.sent_length += 1
        table.decrements += 1
    keep = []
    for en in table.entries:
        if en.live_points == 0 or en.sent_length == len(en.description):
            table.removed_points += en.live_points
        else:
            keep.append(en)
    table.entries = keep


def update_table(table: EdgeTable, e, description=None, added_round: int = 0) -> Optional[EdgeEntry]:
    """Insert or boost edge ``e`` (``None`` is the empty edge)."""
    if e is None:
        return None
    en = table.find(e)
    if en is None:
        en = EdgeEntry(e, tuple(description), 0, table.live_boost, added_round)
        table.entries.append(en)
    else:
        en.live_points += table.live_boost
    table.boosts += table.live_boost
    return en


def cycle_emit(table: EdgeTable, capacity: int) -> list:
    """Pages of one cycle: one bit of every entry with its status flags."""
    slots = [
        Slot(
            en.description[en.sent_length],
            int(en.live_points - 1 == 0),
            int(en.sent_length + 1 == len(en.description)),
            int(en.sent_length == 0),
        )
        for en in table.entries
    ]
    n_pages = max(1, math.ceil(len(slots) / capacity))
    return [
        ConstSymbol(int(p == n_pages - 1), tuple(slots[p * capacity:(p + 1) * capacity]))
        for p in range(n_pages)
    ]


# -- the receiver's reconstruction ------------------------------------------


@dataclass
class MirrorSlot:
    added_round: int
    bits: list
    live_zero: int = 0
    fully_sent: int = 0


class MirrorTable:
    """Receiver-side replay of the counterpart's table from its pages."""

    def __init__(self, capacity: int, T: int, sender: str):
        self.capacity = capacity
        self.T = T
        self.sender = sender
        self.slots: list = []
        self.completed: dict = {}  # added_round -> edge
        self.edges: set = set()
        self.valid = True
        self.rounds = 0
        self.boundaries: list = []  # snapshot at each completed cycle
        self._page = 0
        self._survivors = 0
        self._size: Optional[int] = None

    def snapshot(self) -> list:
        return [(sl.added_round, tuple(sl.bits)) for sl in self.slots]

    def _fail(self):
        self.valid = False
        self.edges = set()

    def _resolve(self, sl: MirrorSlot):
        delta, s = decode_description(sl.bits)
        if s == 0:
            raise ValueError("the empty edge is never transmitted")
        n = sl.added_round - delta
        if n < 0:
            raise ValueError("pointer before the first round")
        if n == 0:
            return resolve_grandchild(None, s, self.T, self.sender)
        if n not in self.completed:
            raise ValueError("pointer to a round with no completed edge")
        return resolve_grandchild(self.completed[n], s, self.T)

    def apply_page(self, value: int) -> None:
        if not self.valid:
            return
        self.rounds += 1
        try:
            page = ConstSymbol.unpack(value, self.capacity)
        except ValueError:
            return self._fail()
        if self._page == 0:
            self._survivors = len(self.slots)
            self._size = None
        S = self._survivors
        base = self._page * self.capacity
        for k, sl in enumerate(page.slots):
            idx = base + k
            if idx < S:
                if sl.newly_added:
                    return self._fail()
                self._absorb(self.slots[idx], sl)
            elif idx == S and sl.newly_added:
                self._size = S + 1
                ms = MirrorSlot(self.rounds, [])
                self.slots.append(ms)
                self._absorb(ms, sl)
            else:
                if idx == S:
                    self._size = S
                if sl != EMPTY_SLOT:
                    return self._fail()
            if not self.valid:
                return
        if self._size is None and S == base + self.capacity and page.last_page:
            # survivors fill this page exactly and nothing was added
            self._size = S
        size = self._size
        is_last = size is not None and self._page == max(1, math.ceil(size / self.capacity)) - 1
        if page.last_page != int(is_last):
            return self._fail()
        if is_last:
            self.slots = [sl for sl in self.slots if not (sl.live_zero or sl.fully_sent)]
            self.boundaries.append(self.snapshot())
            self._page = 0
        else:
            self._page += 1

    def _absorb(self, ms: MirrorSlot, sl: Slot) -> None:
        ms.bits.append(sl.payload)
        ms.live_zero = sl.live_zero
        ms.fully_sent = sl.fully_sent
        if sl.fully_sent:
            try:
                edge = self._resolve(ms)
            except ValueError:
                return self._fail()
            self.completed[ms.added_round] = edge
            self.edges.add(edge)


def mirror_apply(mirror: MirrorTable, decoded_prefix) -> MirrorTable:
    """Feed pages beyond those already consumed; returns the same mirror."""
    for value in decoded_prefix[mirror.rounds:]:
        mirror.apply_page(value)
        if not mirror.valid:
            break
    return mirror


# -- the party --------------------------------------------------------------


class ConstParty(PartyBase):
    def __init__(self, name, instance, cfg: ProtocolConfig, tree=None):
        super().__init__(name, instance, cfg, tree)
        self.table = EdgeTable(cfg.live_boost)
        self.completed: dict = {}  # own edge -> added_round of its completed entry
        self.pages: list = []
        self.page_entries: list = []
        self.page_idx = 0
        self.cycle_snapshots: list = []
        self.full_pages = 0
        self._cycles = 0
        self._cp_name = BOB if name == ALICE else ALICE
        self._mirror = self._fresh_mirror()
        self._mirror_syms: list = []

    def _fresh_mirror(self):
        return MirrorTable(self.cfg.page_capacity, self.T, self._cp_name)

    def decode_edges(self, decoded) -> set:
        seen = self._mirror.rounds
        if decoded[:seen] != self._mirror_syms[:seen] or len(decoded) < seen:
            self._mirror = self._fresh_mirror()
            self._mirror_syms = []
        mirror_apply(self._mirror, decoded)
        self._mirror_syms = list(decoded)
        return set(self._mirror.edges) if self._mirror.valid else set()

    def describe(self, e) -> tuple:
        if len(e) <= 2:
            return encode_description(self.round, rootless_index(e))
        n = self.completed[e[:-2]]
        return encode_description(self.round - n, grandchild_index(e[:-2], e))

    def step(self, received) -> int:
        if self.finished:
            raise RuntimeError(f"party {self.name} has already run {self.cfg.N} rounds")
        self.round += 1
        if received is not None:
            self.received.append(received)
        info = StepInfo()
        decoded = self.oracle.decode(self.received)
        info.decode_ok = decoded is not None
        edges = self.decode_edges(decoded) if decoded is not None else set()
        path = self.walk(edges)
        info.path_len = len(path) if path is not None else 0
        self.tally(path, info)
        e = self.next_edge(path, lambda gp: gp in self.completed) if path is not None else None
        if e is not None and e in self.completed:
            e = None
        boundary = self.round == 1 or self.page_idx >= len(self.pages)
        info.cycle_end = boundary
        if boundary:
            if self._cycles:
                maintain(self.table)
                self.cycle_snapshots.append(self.table.snapshot())
            desc = self.describe(e) if e is not None and self.table.find(e) is None else None
            if update_table(self.table, e, desc, self.round) is not None:
                info.edge = e
            self.pages = cycle_emit(self.table, self.cfg.page_capacity)
            cap = self.cfg.page_capacity
            self.page_entries = [self.table.entries[p * cap:(p + 1) * cap] for p in range(len(self.pages))]
            self.page_idx = 0
            self._cycles += 1
        page = self.pages[self.page_idx]
        for en, sl in zip(self.page_entries[self.page_idx], page.slots):
            if sl.fully_sent:
                self.completed.setdefault(en.edge, en.added_round)
                info.completed.append((en.edge, len(en.description)))
        if len(page.slots) == self.cfg.page_capacity:
            self.full_pages += 1
            info.full_page = True
        self.page_idx += 1
        self.maybe_output(info)
        self.info = info
        return self.emit(page.pack(self.cfg.page_capacity))


# -- configuration ----------------------------------------------------------


def const_relaxed_rho(T: int, N: int, eps, alpha) -> Fraction:
    """Largest ``k/(2N)`` below the desk-scale resilience bound (0 if none).

    The bound solves ``N(1-2 eps(2+eps)) - T(log2(2N/T)+4) > rho N (2 + 8(2+eps)/alpha)``.
    """
    eps, alpha = as_fraction(eps), as_fraction(alpha)
    top = N * (1 - 2 * eps * (2 + eps)) - T * (math.log2(2 * N / T) + 4)
    bottom = N * (2 + 8 * (2 + eps) / alpha)
    value = float(top) / float(bottom)
    if value <= 0:
        return Fraction(0)
    return Fraction(math.floor(value * 2 * N), 2 * N)


def const_config(T: int, eps, strict: bool = True, alpha=None, rho=None,
                 out_alphabet_size: int = 256, tree_seed: int = 0) -> ProtocolConfig:
    eps = as_fraction(eps)
    if strict and not 0 < eps < Fraction(1, 18):
        raise ValueError("strict mode needs 0 < eps < 1/18")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    N = math.ceil(T / eps**2)
    alpha = 1 - eps if alpha is None else as_fraction(alpha)
    if rho is None:
        rho = Fraction(1, 18) - eps if strict else const_relaxed_rho(T, N, eps, alpha)
    return ProtocolConfig("const", T, N, alpha, as_fraction(rho), eps,
                          page_capacity=math.ceil(1 / eps**2), live_boost=math.ceil(1 / eps),
                          out_alphabet_size=out_alphabet_size, tree_seed=tree_seed)
