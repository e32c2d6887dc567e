"""Machinery shared by both coding protocols.

A party is a deterministic state machine: :meth:`PartyBase.step` consumes
one received channel symbol (``None`` for Alice's opening round) and
returns the next channel symbol.  Subclasses supply the input-alphabet
encoding of edges; this module supplies decoding, the path walk, voting
and the output deadline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from typing import Optional

from .edtc import HashTreeCode
from .metrics import SuffixThresholdTracker, as_fraction
from .pjp import ALICE, BOB, PjpInstance


@dataclass(frozen=True)
class ProtocolConfig:
    protocol: str  # "poly" or "const"
    T: int
    N: int
    alpha: Fraction
    rho: Fraction
    eps: Fraction
    page_capacity: int = 0
    live_boost: int = 0
    out_alphabet_size: int = 256
    tree_seed: int = 0
    decoder: str = "shortcut"

    @property
    def budget(self) -> int:
        return math.floor(2 * self.rho * self.N)

    @property
    def deadline(self) -> int:
        """Local round at which each party commits to its output."""
        return max(1, math.ceil(self.N * (1 - 2 * self.rho)))

    def in_alphabet_size(self) -> int:
        if self.protocol == "poly":
            return 4 * (self.N + 1)
        return 2 ** (1 + 4 * self.page_capacity)

    def tree(self) -> HashTreeCode:
        return HashTreeCode(self.in_alphabet_size(), self.N, self.out_alphabet_size, self.tree_seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("alpha", "rho", "eps"):
            d[k] = str(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolConfig":
        d = dict(d)
        for k in ("alpha", "rho", "eps"):
            d[k] = Fraction(d[k])
        return cls(**d)


class ShortcutOracle:
    """Ground-truth decoder bound to every party whose codewords reach us.

    The sources are the real counterpart plus any simulated party an
    adversary injects.  A source whose codeword is within ``alpha/2`` suffix
    distance of what was received yields its full sent message; ``None`` (the
    invalid marker) means no source qualifies.  If several sources with
    different messages qualify, the smallest message wins so that the result
    depends only on the set of sources.  Comparisons are incremental.
    """

    def __init__(self, alpha):
        self.lam = as_fraction(alpha) / 2
        self.sources: list = []
        self.trackers: list = []

    @property
    def counterpart(self) -> Optional["PartyBase"]:
        return self.sources[0] if self.sources else None

    @counterpart.setter
    def counterpart(self, party: "PartyBase") -> None:
        self.sources, self.trackers = [], []
        self.add_source(party)

    def add_source(self, party: "PartyBase") -> None:
        self.sources.append(party)
        self.trackers.append(SuffixThresholdTracker(self.lam))

    def decode(self, received: list):
        hits = []
        for src, tr in zip(self.sources, self.trackers):
            while len(tr.sm) < len(src.sent_channel):
                tr.add_sent(src.sent_channel[len(tr.sm)])
            while len(tr.rm) < len(received):
                tr.add_received(received[len(tr.rm)])
            if tr.within():
                hits.append(list(src.sent_inputs))
        return min(hits) if hits else None


@dataclass
class StepInfo:
    """What one round did; the scheduler copies this into the run log."""

    decode_ok: bool = False
    cycle_end: bool = True
    path_len: int = 0
    vote: Optional[tuple] = None
    edge: Optional[tuple] = None  # edge selected this round, if any
    completed: list = field(default_factory=list)  # (edge, description length)
    full_page: bool = False
    output: Optional[tuple] = None


class PartyBase:
    def __init__(self, name: str, instance: PjpInstance, cfg: ProtocolConfig, tree=None):
        if name not in (ALICE, BOB):
            raise ValueError("party name must be 'A' or 'B'")
        self.name = name
        self.cfg = cfg
        self.instance = instance
        self.T = instance.T
        self.own = dict(instance.edges_of(name))
        self.tree = tree if tree is not None else cfg.tree()
        self.round = 0
        self.received: list = []
        self.sent_inputs: list = []
        self.sent_channel: list = []
        self.votes: dict = {}
        self.output: Optional[tuple] = None
        self.oracle = ShortcutOracle(cfg.alpha)
        self._node = self.tree.root()
        self.info = StepInfo()

    def bind(self, counterpart: "PartyBase") -> None:
        self.oracle.counterpart = counterpart

    @property
    def finished(self) -> bool:
        return self.round >= self.cfg.N

    # subclasses: map a decoded message to the counterpart's edge set
    def decode_edges(self, decoded) -> set:
        raise NotImplementedError

    def walk(self, edges: set):
        """Follow the unique path from the root through ``edges`` and own input.

        Returns the path as a list of edges, or ``None`` when some vertex on
        the way has two outgoing candidates.
        """
        v, path = (), []
        while len(v) < self.T:
            cands = {e for e in ((v + (0,)), (v + (1,))) if e in edges}
            if v in self.own:
                cands.add(v + (self.own[v],))
            if len(cands) > 1:
                return None
            if not cands:
                break
            v = cands.pop()
            path.append(v)
        return path

    def next_edge(self, path, linkable) -> Optional[tuple]:
        """The deepest path edge when it is ours and can be linked, else ``None``."""
        if not path:
            return None
        e = path[-1]
        if e[:-1] not in self.own or self.own[e[:-1]] != e[-1]:
            return None
        if len(e) <= 2 or linkable(e[:-2]):
            return e
        return None

    def tally(self, path, info: StepInfo) -> None:
        if path is not None and len(path) == self.T:
            leaf = path[-1]
            self.votes[leaf] = self.votes.get(leaf, 0) + 1
            info.vote = leaf

    def maybe_output(self, info: StepInfo) -> None:
        if self.round == self.cfg.deadline:
            if self.votes:
                top = max(self.votes.values())
                self.output = min(v for v, c in self.votes.items() if c == top)
            else:
                self.output = None
            info.output = self.output

    def emit(self, in_symbol: int) -> int:
        self._node, label = self.tree.child(self._node, in_symbol)
        self.sent_inputs.append(in_symbol)
        self.sent_channel.append(label)
        return label
