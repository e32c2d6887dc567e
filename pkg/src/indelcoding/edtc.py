"""Edit-distance tree codes.

A tree code of arity ``d`` and depth ``n`` labels every edge of the complete
``d``-ary tree with a symbol of the output alphabet; a message (a path) is
encoded by reading the labels along it.  Nodes are addressed by their path
from the root, a tuple of ints in ``range(d)``.

Two representations share one interface (``root``/``child``/``label``/
``encode``):

* :class:`TreeCode` stores every label explicitly and is what the exhaustive
  verifiers and the text format work with.
* :class:`HashTreeCode` derives labels lazily from a keyed hash of the path.
  It stands in for a uniformly random labeling when the arity or depth is
  far too large to materialize, as in the coding protocols.
"""

from __future__ import annotations

import hashlib
import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from .metrics import (
    INF,
    _weights,
    as_fraction,
    edit_distance,
    suffix_distance,
    suffix_distance_at_most,
)


class TreeDepthError(ValueError):
    pass


class ConstructionError(RuntimeError):
    """Rejection sampling ran out of attempts."""

    def __init__(self, attempts, witness):
        super().__init__(f"no bad-lambda-free tree after {attempts} attempts; last witness {witness}")
        self.attempts = attempts
        self.witness = witness


@dataclass(frozen=True)
class TreeCode:
    d: int
    n: int
    out_alphabet_size: int
    labels: tuple
    seed: int = 0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("arity must be at least 2")
        if len(self.labels) != edge_count(self.d, self.n):
            raise ValueError("label count does not match a complete tree")
        if any(not 0 <= x < self.out_alphabet_size for x in self.labels):
            raise ValueError("label outside the output alphabet")

    def root(self):
        return 0

    def child(self, node: int, sym: int):
        """Step from a heap-indexed node; returns ``(child, edge label)``."""
        c = node * self.d + sym + 1
        return c, self.labels[c - 1]

    def label(self, path: Sequence[int]) -> int:
        """Label of the deepest edge of ``path``."""
        if not 1 <= len(path) <= self.n:
            raise TreeDepthError(f"path length {len(path)} outside [1, {self.n}]")
        node = 0
        for s in path:
            if not 0 <= s < self.d:
                raise ValueError(f"symbol {s} outside input alphabet")
            node = node * self.d + s + 1
        return self.labels[node - 1]

    def encode(self, message: Sequence[int]) -> list:
        return _encode(self, message)


@dataclass(frozen=True)
class HashTreeCode:
    """Lazily labeled tree: label = keyed hash of the full path, mod alphabet."""

    d: int
    n: int
    out_alphabet_size: int
    seed: int = 0
    _key: bytes = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_key", hashlib.blake2b(str(self.seed).encode(), digest_size=16).digest())

    def root(self):
        return (0, self._key)

    def child(self, node, sym: int):
        depth, h = node
        if depth >= self.n:
            raise TreeDepthError(f"depth {depth + 1} exceeds tree depth {self.n}")
        if not 0 <= sym < self.d:
            raise ValueError(f"symbol {sym} outside input alphabet")
        raw = sym.to_bytes((sym.bit_length() + 7) // 8 or 1, "big")
        h2 = hashlib.blake2b(h + len(raw).to_bytes(2, "big") + raw, digest_size=16).digest()
        return (depth + 1, h2), int.from_bytes(h2[:8], "big") % self.out_alphabet_size

    def label(self, path: Sequence[int]) -> int:
        if not 1 <= len(path) <= self.n:
            raise TreeDepthError(f"path length {len(path)} outside [1, {self.n}]")
        node, lab = self.root(), None
        for s in path:
            node, lab = self.child(node, s)
        return lab

    def encode(self, message: Sequence[int]) -> list:
        return _encode(self, message)


def _encode(tree, message):
    if len(message) > tree.n:
        raise TreeDepthError(f"message length {len(message)} exceeds depth {tree.n}")
    node, out = tree.root(), []
    for s in message:
        node, lab = tree.child(node, s)
        out.append(lab)
    return out


def edge_count(d: int, n: int) -> int:
    return sum(d**k for k in range(1, n + 1))


def build_random_tree(d, n, out_alphabet_size, seed) -> TreeCode:
    """Every label independent and uniform, reproducible from ``seed``."""
    if out_alphabet_size < 2:
        raise ValueError("output alphabet needs at least 2 symbols")
    rng = random.Random(seed)
    labels = tuple(rng.randrange(out_alphabet_size) for _ in range(edge_count(d, n)))
    return TreeCode(d, n, out_alphabet_size, labels, seed)


def encode_step(tree, message_prefix: Sequence[int]) -> int:
    """The symbol sent at step ``i = len(message_prefix)``."""
    return tree.label(message_prefix)


# -- bad lambdas ------------------------------------------------------------


@dataclass(frozen=True)
class BadLambda:
    a: tuple
    b: tuple
    d_node: tuple
    e_node: tuple
    ad_string: tuple
    be_string: tuple
    ratio: Fraction


def _nodes(d, n) -> list:
    out = [()]
    frontier = [()]
    for _ in range(n):
        frontier = [p + (s,) for p in frontier for s in range(d)]
        out.extend(frontier)
    return out


def _root_strings(tree) -> dict:
    strings = {(): ()}
    for p in _nodes(tree.d, tree.n):
        if p:
            strings[p] = strings[p[:-1]] + (tree.label(p),)
    return strings


def _subtree(prefix, d, depth_left) -> Iterator[tuple]:
    for k in range(1, depth_left + 1):
        for tail in itertools.product(range(d), repeat=k):
            yield prefix + tail


def _check(strings, a, b, dn, en, alpha):
    ad = strings[dn][len(a):]
    be = strings[en][len(b):]
    m = max(len(ad), len(be))
    if abs(len(ad) - len(be)) > alpha * m:
        return None
    ed = edit_distance(ad, be)
    if ed <= alpha * m:
        return BadLambda(a, b, dn, en, ad, be, Fraction(ed, m))
    return None


def iter_bad_lambdas(tree, alpha) -> Iterator[BadLambda]:
    """Every alpha-bad lambda of an explicit tree, exhaustively.

    ``B`` is the lowest common ancestor of ``D`` and ``E`` (they hang off
    different children of ``B``), ``A`` is ``B`` or one of its ancestors.
    """
    alpha = as_fraction(alpha)
    strings = _root_strings(tree)
    for b in _nodes(tree.d, tree.n - 1):
        left = tree.n - len(b)
        for c1, c2 in itertools.permutations(range(tree.d), 2):
            ds = list(_subtree(b + (c1,), tree.d, left - 1)) + [b + (c1,)]
            es = list(_subtree(b + (c2,), tree.d, left - 1)) + [b + (c2,)]
            for dn in ds:
                for en in es:
                    for h in range(len(b), -1, -1):
                        hit = _check(strings, b[:h], b, dn, en, alpha)
                        if hit:
                            yield hit


def find_bad_lambda(tree, alpha) -> Optional[BadLambda]:
    return next(iter_bad_lambdas(tree, alpha), None)


def build_edtc_rejection(d, n, alpha, out_alphabet_size, seed, max_attempts=100, stats=None) -> TreeCode:
    """Sample random trees until one has no alpha-bad lambda.

    If ``stats`` is a dict, the number of attempts used is stored under
    ``"attempts"``.
    """
    if n > 8:
        raise ValueError("exhaustive verification is limited to depth 8")
    rng = random.Random(seed)
    witness = None
    for attempt in range(1, max_attempts + 1):
        tree = build_random_tree(d, n, out_alphabet_size, rng.randrange(2**31))
        witness = find_bad_lambda(tree, alpha)
        if stats is not None:
            stats["attempts"] = attempt
        if witness is None:
            return tree
    raise ConstructionError(max_attempts, witness)


# -- potency ----------------------------------------------------------------


@dataclass
class PotencyReport:
    worst_path: tuple
    bad_interval_union_length: int
    intervals: list
    witnesses: list
    paths_examined: int = 0

    def is_potent(self, delta, n) -> bool:
        return self.bad_interval_union_length < as_fraction(delta) * n


def bad_interval(lam: BadLambda):
    # [depth(A), depth(A) + max(|AD|, |AE|)]
    h = len(lam.a)
    ae = len(lam.e_node) - h
    return (h, h + max(len(lam.ad_string), ae))


def union_length(intervals) -> int:
    total, end = 0, None
    for lo, hi in sorted(intervals):
        if end is None or lo > end:
            total += hi - lo
            end = hi
        elif hi > end:
            total += hi - end
            end = hi
    return total


def lambdas_touching(tree, alpha, leaf) -> list:
    """Bad lambdas whose D or E lies on the root-to-``leaf`` path."""
    alpha = as_fraction(alpha)
    strings = _root_strings_along(tree, leaf)
    found = []
    seen = set()
    for j in range(1, len(leaf) + 1):
        x = tuple(leaf[:j])
        for k in range(j):
            b = x[:k]
            for c in range(tree.d):
                if c == x[k]:
                    continue
                others = [b + (c,)] + list(_subtree(b + (c,), tree.d, tree.n - k - 1))
                for y in others:
                    _extend_strings(tree, strings, y)
                    for dn, en in ((x, y), (y, x)):
                        for h in range(k, -1, -1):
                            hit = _check(strings, b[:h], b, dn, en, alpha)
                            if hit:
                                key = (hit.a, hit.d_node, hit.e_node)
                                if key not in seen:
                                    seen.add(key)
                                    found.append(hit)
    return found


def _root_strings_along(tree, leaf):
    strings = {(): ()}
    for j in range(1, len(leaf) + 1):
        p = tuple(leaf[:j])
        strings[p] = strings[p[:-1]] + (tree.label(p),)
    return strings


def _extend_strings(tree, strings, node):
    if node in strings:
        return
    _extend_strings(tree, strings, node[:-1])
    strings[node] = strings[node[:-1]] + (tree.label(node),)


def potency_report(tree, alpha, paths=None, seed=0) -> PotencyReport:
    """Worst root-to-leaf path by union length of its bad intervals.

    ``paths=None`` examines every leaf; an int samples that many random
    leaves with ``seed``.
    """
    if paths is None:
        if tree.n > 8:
            raise ValueError("exhaustive potency check is limited to depth 8")
        leaves = list(itertools.product(range(tree.d), repeat=tree.n))
    else:
        rng = random.Random(seed)
        leaves = [tuple(rng.randrange(tree.d) for _ in range(tree.n)) for _ in range(paths)]
    worst = None
    for leaf in leaves:
        lams = lambdas_touching(tree, alpha, leaf)
        ivs = [bad_interval(l) for l in lams]
        total = union_length(ivs)
        if worst is None or total > worst.bad_interval_union_length:
            worst = PotencyReport(leaf, total, sorted(ivs), lams)
    worst.paths_examined = len(leaves)
    return worst


def disjoint_interval_cover(intervals) -> list:
    """Pairwise-disjoint subset covering at least half the union length.

    A greedy minimal cover of each connected run has the property that
    intervals two apart in it do not meet, so its odd- or even-indexed
    members form a disjoint family; the heavier family carries at least
    half of the union.
    """
    ivs = sorted(set((lo, hi) for lo, hi in intervals))
    cover = []
    i = 0
    while i < len(ivs):
        reach_lo, reach = ivs[i]
        chosen = ivs[i]
        # best interval starting at the start of this run
        while i < len(ivs) and ivs[i][0] == reach_lo:
            if ivs[i][1] >= chosen[1]:
                chosen = ivs[i]
            i += 1
        cover.append(chosen)
        reach = chosen[1]
        while True:
            best = None
            while i < len(ivs) and ivs[i][0] <= reach:
                if ivs[i][1] > reach and (best is None or ivs[i][1] > best[1]):
                    best = ivs[i]
                i += 1
            if best is None:
                break
            cover.append(best)
            reach = best[1]
    odd = cover[0::2]
    even = cover[1::2]
    lo_sum = sum(h - l for l, h in odd)
    hi_sum = sum(h - l for l, h in even)
    return odd if lo_sum >= hi_sum else even


# -- decoding ---------------------------------------------------------------


INVALID = None


@dataclass(frozen=True)
class DecodeResult:
    message: Optional[tuple]
    sd: object
    below_threshold: bool


def iter_messages(d, n) -> Iterator[tuple]:
    """All non-empty messages, shorter first, then lexicographic."""
    for k in range(1, n + 1):
        yield from itertools.product(range(d), repeat=k)


def decode_exact(tree, rm, alpha) -> DecodeResult:
    """Minimize ``SD(C(m), rm)`` over every non-empty message ``m``.

    Exhaustive; ties go to the shorter, then lexicographically smaller
    message because candidates are visited in that order.
    """
    alpha = as_fraction(alpha)
    rm = tuple(rm)
    best_m, best_sd = None, INF
    for m in iter_messages(tree.d, tree.n):
        sd = suffix_distance(tree.encode(m), rm).value
        if best_m is None or sd < best_sd:
            best_m, best_sd = m, sd
            if sd == 0:
                break
    return DecodeResult(best_m, best_sd, best_sd <= alpha / 2)


def decode_shortcut(tree, rm, true_sent, alpha, codeword=None):
    """Ground-truth decoder for simulations.

    Returns ``(true_sent, "potentially-good")`` when the true codeword is
    within ``alpha/2`` in suffix distance (it is then the unique such
    codeword of an alpha-edit-distance tree code), else
    ``(INVALID, "bad")``.
    """
    alpha = as_fraction(alpha)
    true_sent = tuple(true_sent)
    rm = tuple(rm)
    if not true_sent:
        if not rm:
            return (), "potentially-good"
        return INVALID, "bad"
    cw = tree.encode(true_sent) if codeword is None else codeword
    if suffix_distance_at_most(cw, rm, alpha / 2):
        return true_sent, "potentially-good"
    return INVALID, "bad"


def codewords_within(tree, rm, alpha) -> list:
    """Every codeword prefix with ``SD <= alpha/2`` from ``rm``."""
    alpha = as_fraction(alpha)
    return [m for m in iter_messages(tree.d, tree.n) if suffix_distance_at_most(tree.encode(m), rm, alpha / 2)]


# -- text format ------------------------------------------------------------


def dumps_tree(tree: TreeCode) -> str:
    lines = [f"{tree.d} {tree.n} {tree.out_alphabet_size} {tree.seed}"]
    lines.extend(str(x) for x in tree.labels)
    return "\n".join(lines) + "\n"


def loads_tree(text: str) -> TreeCode:
    rows = text.split("\n")
    d, n, size, seed = (int(x) for x in rows[0].split())
    labels = tuple(int(x) for x in rows[1:] if x.strip())
    return TreeCode(d, n, size, labels, seed)


def write_tree(tree: TreeCode, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_tree(tree))


def read_tree(path) -> TreeCode:
    with open(path) as fh:
        return loads_tree(fh.read())


# -- exhaustive uniqueness check --------------------------------------------


def _within_many(sm, received, lam) -> np.ndarray:
    """Vectorized ``SD(sm, r) <= lam`` for every row ``r`` of ``received``."""
    w_match, w_del, w_ins = _weights(as_fraction(lam))
    count, L = received.shape
    big = np.iinfo(np.int64).max // 4
    prev = [np.full(count, b * w_ins, dtype=np.int64) for b in range(L + 1)]
    for a, s in enumerate(sm, start=1):
        cur = [np.maximum(0, prev[0] + w_del)]
        for b in range(1, L + 1):
            best = np.maximum(0, prev[b] + w_del)
            best = np.minimum(best, cur[b - 1] + w_ins)
            diag = np.where(received[:, b - 1] == s, np.maximum(0, prev[b - 1] + w_match), big)
            cur.append(np.minimum(best, diag))
        prev = cur
    return prev[L] == 0


def uniqueness_violations(tree, alpha, max_len: int, alphabet: Optional[int] = None) -> list:
    """Received strings with two or more codeword prefixes within ``alpha/2``.

    Every string over ``range(alphabet)`` (default: the output alphabet) of
    length ``0..max_len`` is checked against every codeword prefix.
    """
    alphabet = tree.out_alphabet_size if alphabet is None else alphabet
    lam = as_fraction(alpha) / 2
    codewords = [tuple(tree.encode(m)) for m in iter_messages(tree.d, tree.n)]
    bad = []
    for L in range(max_len + 1):
        rows = list(itertools.product(range(alphabet), repeat=L))
        received = np.array(rows, dtype=np.int64).reshape(len(rows), L)
        hits = np.zeros(len(received), dtype=np.int64)
        for cw in codewords:
            hits += _within_many(cw, received, lam)
        for row in np.nonzero(hits > 1)[0]:
            bad.append(tuple(int(x) for x in received[row]))
    return bad
