"""Message-driven two-party scheduler with an edit-corruption adversary.

Exactly one symbol is in flight at any time.  Alice opens; afterwards the
adversary rules on each transmission:

* ``deliver`` hands the symbol to the receiver, who replies;
* ``substitute(x)`` deletes it and hands ``x`` to the receiver instead;
* ``out_of_sync(x)`` deletes it and hands ``x`` back to the sender, who
  then takes another round while the receiver waits.

Each corruption costs one unit of the budget.  A party halts after ``N``
rounds, and the session ends as soon as the in-flight symbol is addressed
to a halted party; that last symbol is never received and appears in no
matching.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from ._party import PartyBase, ProtocolConfig
from .metrics import STAR, StringMatching
from .pjp import ALICE, BOB, PjpInstance, dumps_instance, loads_instance

DELIVER_KIND, SUBSTITUTE, OUT_OF_SYNC = "deliver", "substitute", "out_of_sync"


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Action:
    kind: str
    symbol: Optional[int] = None

    @property
    def cost(self) -> int:
        return 0 if self.kind == DELIVER_KIND else 1


DELIVER = Action(DELIVER_KIND)


def substitute(symbol: int) -> Action:
    return Action(SUBSTITUTE, symbol)


def out_of_sync(symbol: int) -> Action:
    return Action(OUT_OF_SYNC, symbol)


@dataclass
class NoiseBudget:
    total: int
    spent: int = 0

    @classmethod
    def for_rate(cls, rho, N) -> "NoiseBudget":
        return cls(math.floor(2 * Fraction(rho) * N))

    @property
    def remaining(self) -> int:
        return self.total - self.spent

    def charge(self) -> None:
        if self.spent >= self.total:
            raise BudgetExceeded(f"corruption {self.spent + 1} exceeds budget {self.total}")
        self.spent += 1


@dataclass
class Context:
    """What the adversary sees when ruling on one transmission."""

    index: int  # 0-based transmission counter
    sender: str
    sender_round: int
    symbol: int
    budget: NoiseBudget
    out_alphabet_size: int
    parties: dict


# -- adversaries ------------------------------------------------------------


class Adversary:
    name = "adversary"

    def decide(self, ctx: Context) -> Action:
        raise NotImplementedError


class NoAdversary(Adversary):
    name = "none"

    def decide(self, ctx):
        return DELIVER


class RandomAdversary(Adversary):
    """Corrupt each transmission with probability ``rate`` while budget lasts."""

    def __init__(self, rate, seed):
        self.rate = float(rate)
        self.rng = random.Random(seed)
        self.name = f"random:{rate}:{seed}"

    def decide(self, ctx):
        if ctx.budget.remaining <= 0 or self.rng.random() >= self.rate:
            return DELIVER
        kind = self.rng.choice((SUBSTITUTE, OUT_OF_SYNC))
        return Action(kind, self.rng.randrange(ctx.out_alphabet_size))


class BurstAdversary(Adversary):
    """Corrupt transmissions ``start .. start+length-1`` while budget lasts."""

    def __init__(self, start, length, kind="mixed", seed=0):
        if kind not in (SUBSTITUTE, OUT_OF_SYNC, "mixed"):
            raise ValueError(f"unknown burst kind {kind!r}")
        self.start, self.length, self.kind = start, length, kind
        self.rng = random.Random(seed)
        self.name = f"burst:{start}:{length}:{kind}:{seed}"

    def decide(self, ctx):
        if not self.start <= ctx.index < self.start + self.length or ctx.budget.remaining <= 0:
            return DELIVER
        kind = self.kind if self.kind != "mixed" else self.rng.choice((SUBSTITUTE, OUT_OF_SYNC))
        return Action(kind, self.rng.randrange(ctx.out_alphabet_size))


class SpoofInputAdversary(Adversary):
    """Answer the victim with a private simulation of its counterpart.

    The victim's sends number ``start+1 .. start+length`` are removed and the
    simulated counterpart's replies to them are handed back instead.
    """

    def __init__(self, party_factory: Callable, alt_instance: PjpInstance, start=0, length=None,
                 victim=ALICE):
        self.factory = party_factory
        self.alt_instance = alt_instance
        self.start = start
        self.length = length
        self.victim = victim
        self.sim: Optional[PartyBase] = None
        self.victim_sends = 0
        self.name = f"spoof:{victim}:{start}:{length}"

    def decide(self, ctx):
        if ctx.sender != self.victim:
            return DELIVER
        self.victim_sends += 1
        length = self.length if self.length is not None else ctx.parties[self.victim].cfg.N // 3
        if not self.start < self.victim_sends <= self.start + length:
            return DELIVER
        if ctx.budget.remaining <= 0:
            raise BudgetExceeded("spoofing window exceeds the corruption budget")
        if self.sim is None:
            other = BOB if self.victim == ALICE else ALICE
            self.sim = self.factory(other, self.alt_instance)
            self.sim.bind(ctx.parties[self.victim])
            ctx.parties[self.victim].oracle.add_source(self.sim)
        return out_of_sync(self.sim.step(ctx.symbol))


def adversary_none() -> Adversary:
    return NoAdversary()


def adversary_random(rate, seed) -> Adversary:
    return RandomAdversary(rate, seed)


def adversary_burst(start, length, kind="mixed", seed=0) -> Adversary:
    return BurstAdversary(start, length, kind, seed)


def adversary_spoof_input(party_factory, alt_instance, window=None, start=0, victim=ALICE) -> Adversary:
    return SpoofInputAdversary(party_factory, alt_instance, start, window, victim)


# -- run log ----------------------------------------------------------------


def _bits(edge) -> Optional[str]:
    return None if edge is None else "".join(map(str, edge))


def _edge(s) -> Optional[tuple]:
    return None if s is None else tuple(int(c) for c in s)


@dataclass
class Event:
    t: int
    party: str
    round: int
    received: Optional[int]
    genuine: bool
    sent: int
    sent_input: int
    decode_ok: bool
    cycle_end: bool
    good: bool
    path_len: int
    vote: Optional[tuple]
    edge: Optional[tuple]
    completed: list
    full_page: bool
    output: Optional[tuple]

    def to_json(self) -> dict:
        d = asdict(self)
        d["vote"] = _bits(self.vote)
        d["edge"] = _bits(self.edge)
        d["output"] = _bits(self.output)
        d["completed"] = [[_bits(e), n] for e, n in self.completed]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Event":
        d = dict(d)
        for k in ("vote", "edge", "output"):
            d[k] = _edge(d[k])
        d["completed"] = [(_edge(e), n) for e, n in d["completed"]]
        return cls(**d)


@dataclass
class Transmission:
    index: int
    sender: str
    symbol: int
    kind: str
    forged: Optional[int]


@dataclass
class RunLog:
    config: ProtocolConfig
    instance: PjpInstance
    adversary: str
    decoder: str
    budget_total: int
    events: list = field(default_factory=list)
    transmissions: list = field(default_factory=list)
    n_a: int = 0
    n_b: int = 0
    spent: int = 0
    outputs: dict = field(default_factory=dict)
    full_pages: dict = field(default_factory=dict)
    final_in_flight: Optional[tuple] = None

    def header(self) -> dict:
        return {
            "type": "header",
            "config": self.config.to_dict(),
            "instance": dumps_instance(self.instance),
            "adversary": self.adversary,
            "decoder": self.decoder,
            "budget_total": self.budget_total,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "spent": self.spent,
            "outputs": {k: _bits(v) for k, v in sorted(self.outputs.items())},
            "full_pages": dict(sorted(self.full_pages.items())),
            "final_in_flight": list(self.final_in_flight) if self.final_in_flight else None,
        }

    def dumps(self) -> str:
        lines = [json.dumps(self.header(), sort_keys=True)]
        lines += [json.dumps({"type": "event", **e.to_json()}, sort_keys=True) for e in self.events]
        lines += [json.dumps({"type": "tx", **asdict(x)}, sort_keys=True) for x in self.transmissions]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "RunLog":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        h = rows[0]
        if h.get("type") != "header":
            raise ValueError("trace must start with a header line")
        log = cls(ProtocolConfig.from_dict(h["config"]), loads_instance(h["instance"]), h["adversary"],
                  h["decoder"], h["budget_total"], n_a=h["n_a"], n_b=h["n_b"], spent=h["spent"],
                  outputs={k: _edge(v) for k, v in h["outputs"].items()}, full_pages=h["full_pages"],
                  final_in_flight=tuple(h["final_in_flight"]) if h["final_in_flight"] else None)
        for r in rows[1:]:
            kind = r.pop("type")
            if kind == "event":
                log.events.append(Event.from_json(r))
            elif kind == "tx":
                log.transmissions.append(Transmission(**r))
            else:
                raise ValueError(f"unknown trace line kind {kind!r}")
        return log


def write_trace(log: RunLog, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(log.dumps())


def read_trace(path) -> RunLog:
    with open(path) as fh:
        return RunLog.loads(fh.read())


# -- the scheduler ----------------------------------------------------------


def _record(log: RunLog, t: int, party: PartyBase, received, genuine: bool) -> None:
    info = party.info
    good = info.decode_ok and genuine and (info.cycle_end or log.config.protocol != "const")
    log.events.append(Event(
        t, party.name, party.round, received, genuine, party.sent_channel[-1], party.sent_inputs[-1],
        info.decode_ok, info.cycle_end, good, info.path_len, info.vote, info.edge,
        list(info.completed), info.full_page, info.output,
    ))


def run_session(alice: PartyBase, bob: PartyBase, adversary: Adversary, budget: NoiseBudget, N: int,
                decoder: str = "shortcut") -> RunLog:
    if alice.name != ALICE or bob.name != BOB:
        raise ValueError("pass Alice first, then Bob")
    alice.bind(bob)
    bob.bind(alice)
    cfg = alice.cfg
    if N != cfg.N:
        raise ValueError("session length disagrees with the protocol configuration")
    parties = {ALICE: alice, BOB: bob}
    log = RunLog(cfg, _instance_of(alice, bob), adversary.name, decoder, budget.total)
    t = 1
    sym = alice.step(None)
    _record(log, t, alice, None, True)
    sender = alice
    index = 0
    while True:
        receiver = bob if sender is alice else alice
        action = adversary.decide(Context(index, sender.name, sender.round, sym, budget,
                                          cfg.out_alphabet_size, parties))
        if action.kind == OUT_OF_SYNC and sender.finished:
            # a halted sender cannot take a spoofed reply; the symbol goes on
            action = DELIVER
        target = sender if action.kind == OUT_OF_SYNC else receiver
        if target.finished:
            log.final_in_flight = (sender.name, sym)
            break
        if action.cost:
            budget.charge()
        log.transmissions.append(Transmission(index, sender.name, sym, action.kind, action.symbol))
        incoming = sym if action.kind == DELIVER_KIND else action.symbol
        t += 1
        sym = target.step(incoming)
        _record(log, t, target, incoming, action.kind == DELIVER_KIND)
        sender = target
        index += 1
    log.n_a, log.n_b, log.spent = alice.round, bob.round, budget.spent
    log.outputs = {ALICE: alice.output, BOB: bob.output}
    if cfg.protocol == "const":
        log.full_pages = {ALICE: alice.full_pages, BOB: bob.full_pages}
    return log


def _instance_of(alice, bob) -> PjpInstance:
    inst = getattr(alice, "instance", None)
    if inst is not None:
        return inst
    raise ValueError("parties must carry their instance")


# -- matchings --------------------------------------------------------------


def matchings(log: RunLog):
    """The canonical matchings ``(tau_A, tau_B)`` implied by the action trace.

    ``tau_A`` aligns Bob's sends with Alice's receptions and ``tau_B``
    Alice's sends with Bob's receptions.
    """
    cols = {ALICE: ([], []), BOB: ([], [])}  # keyed by receiving party

    def put(receiver, sent, got):
        cols[receiver][0].append(sent)
        cols[receiver][1].append(got)

    for x in log.transmissions:
        receiver = BOB if x.sender == ALICE else ALICE
        if x.kind == DELIVER_KIND:
            put(receiver, x.symbol, x.symbol)
        elif x.kind == SUBSTITUTE:
            put(receiver, x.symbol, STAR)
            put(receiver, STAR, x.forged)
        else:
            put(receiver, x.symbol, STAR)
            put(x.sender, STAR, x.forged)
    tau_a = StringMatching(tuple(cols[ALICE][0]), tuple(cols[ALICE][1]))
    tau_b = StringMatching(tuple(cols[BOB][0]), tuple(cols[BOB][1]))
    return tau_a, tau_b


# -- audits -----------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    holds: bool
    slack: str
    detail: str = ""


@dataclass
class AnalysisReport:
    n_a: int
    n_b: int
    spent: int
    g_a: int
    b_a: int
    g_b: int
    b_b: int
    sc: tuple
    milestones: list
    alice_correct: bool
    bob_correct: bool
    checks: list

    def violations(self) -> list:
        return [c for c in self.checks if not c.holds]

    def slack(self, prefix: str) -> Optional[Fraction]:
        vals = [Fraction(c.slack) for c in self.checks if c.name.startswith(prefix)]
        return min(vals) if vals else None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["milestones"] = list(self.milestones)
        return d

    def render(self) -> str:
        lines = [
            f"rounds: N_A={self.n_a} N_B={self.n_b}  corruptions spent={self.spent}",
            f"good/bad: g_A={self.g_a} b_A={self.b_a} g_B={self.g_b} b_B={self.b_b}",
            f"outputs correct: alice={self.alice_correct} bob={self.bob_correct}",
        ]
        for c in self.checks:
            mark = "ok " if c.holds else "VIOLATED"
            lines.append(f"  [{mark}] {c.name}: slack {c.slack} {c.detail}".rstrip())
        return "\n".join(lines)


def _progress(log: RunLog, instance: PjpInstance):
    """Milestones ``m(i)`` and first-completion description lengths ``l_i``."""
    P = instance.path_edges()
    index = {e: k for k, e in enumerate(P)}
    have = [False] * len(P)
    lengths = [0] * len(P)
    m = [0] + [None] * len(P)
    level = 0
    for ev in log.events:
        if log.config.protocol == "const":
            fresh = ev.completed
        else:
            fresh = [(ev.edge, 0)] if ev.edge is not None else []
        for e, n in fresh:
            k = index.get(e)
            if k is not None and not have[k]:
                have[k] = True
                lengths[k] = n
        while level < len(P) and have[level]:
            level += 1
            m[level] = ev.t
    return m, lengths


def _window(events, lo, hi):
    g = {ALICE: 0, BOB: 0}
    b = {ALICE: 0, BOB: 0}
    for ev in events:
        if lo <= ev.t <= hi:
            (g if ev.good else b)[ev.party] += 1
    return g, b


def analyze_log(log: RunLog, instance: Optional[PjpInstance] = None, cfg: Optional[ProtocolConfig] = None
                ) -> AnalysisReport:
    """Evaluate the decoding and progress inequalities on a finished run."""
    instance = instance or log.instance
    cfg = cfg or log.config
    alpha, eps, T = cfg.alpha, cfg.eps, instance.T
    const = cfg.protocol == "const"
    tau_a, tau_b = matchings(log)
    sc1, sc2, sc3, sc4 = tau_a.sc1(), tau_a.sc2(), tau_b.sc1(), tau_b.sc2()
    n = {ALICE: log.n_a, BOB: log.n_b}
    g = {ALICE: 0, BOB: 0}
    for ev in log.events:
        if ev.good:
            g[ev.party] += 1
    b = {p: n[p] - g[p] for p in n}
    checks = []

    def add(name, slack, detail=""):
        checks.append(Check(name, slack >= 0, str(slack), detail))

    add("budget", Fraction(log.budget_total - log.spent))
    add("insertions-balance", Fraction(-abs(sc1 + sc3 - log.spent)), f"sc1+sc3={sc1 + sc3}")
    add("deletions-balance", Fraction(-abs(sc2 + sc4 - log.spent)), f"sc2+sc4={sc2 + sc4}")
    add("termination-skew", Fraction(log.spent - abs(log.n_a - log.n_b)))
    add("event-count", Fraction(-abs(len(log.events) - log.n_a - log.n_b)))

    family = "good-decodings-cycle" if const else "good-decodings"
    for p, ins, dels in ((ALICE, sc1, sc2), (BOB, sc3, sc4)):
        base = n[p] * (1 - eps) if const else Fraction(n[p])
        bound = base + (1 - 2 / alpha) * dels - (1 + 2 / alpha) * ins
        add(f"{family}[{p}]", g[p] - bound, f"g={g[p]} bound={bound}")

    m, lengths = _progress(log, instance)
    last_t = log.events[-1].t if log.events else 0
    for i in range(T):
        if m[i] is None:
            break
        slow, fast = (ALICE, BOB) if i % 2 == 0 else (BOB, ALICE)
        # slow: the party that must answer the i-th edge; fast: the one that sent it
        if not const:
            hi = m[i + 1] - 1 if m[i + 1] is not None else last_t
            if hi < m[i] + 1:
                continue
            gw, bw = _window(log.events, m[i] + 1, hi)
            add(f"progress-window[{i}]-no-good[{slow}]", Fraction(-gw[slow]))
            add(f"progress-window[{i}]-echo[{fast}]", Fraction(bw[slow] - gw[fast]),
                f"g_{fast}={gw[fast]} b_{slow}={bw[slow]}")
        else:
            if m[i + 1] is None:
                continue
            gw, bw = _window(log.events, m[i] + 1, m[i + 1])
            li = lengths[i]
            add(f"cycle-window[{i}]-owner[{slow}]", li + eps * bw[slow] - gw[slow],
                f"g={gw[slow]} b={bw[slow]} l={li}")
            add(f"cycle-window[{i}]-other[{fast}]", li + (1 + eps) * bw[slow] - gw[fast],
                f"g={gw[fast]} b={bw[slow]} l={li}")

    if const:
        for p in (ALICE, BOB):
            fp = log.full_pages.get(p, 0)
            add(f"full-pages[{p}]", eps * n[p] - fp, f"full={fp}")
        total = sum(lengths)
        bound = T * (math.log2((log.n_a + log.n_b) / T) + 4)
        add("description-lengths", Fraction(bound).limit_denominator(10**6) - total,
            f"sum={total} bound={bound:.3f}")

    leaf = instance.leaf
    return AnalysisReport(
        log.n_a, log.n_b, log.spent, g[ALICE], b[ALICE], g[BOB], b[BOB], (sc1, sc2, sc3, sc4),
        list(m), log.outputs.get(ALICE) == leaf, log.outputs.get(BOB) == leaf, checks,
    )
