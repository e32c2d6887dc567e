"""Exact string metrics over small-integer alphabets.

Strings are sequences of non-negative ints.  The padding marker of a string
matching is ``STAR`` (``None``) and never appears inside an input string.

Suffix distance values are exact: either a :class:`fractions.Fraction` or
``INF`` (``math.inf``), which compares correctly against fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

STAR = None
INF = math.inf

# grid moves: match consumes one symbol of each string, DEL consumes a sent
# symbol only (star in tau2), INS consumes a received symbol only (star in tau1)
MATCH, DEL, INS = 0, 1, 2

BRUTEFORCE_CAP = 8


def as_fraction(x) -> Fraction:
    """Coerce a user-supplied threshold to an exact fraction.

    Floats are snapped to the nearest fraction with a small denominator so
    that ``0.1`` means one tenth rather than its binary approximation.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x).limit_denominator(10**6)


@dataclass(frozen=True)
class StringMatching:
    """A pair of equal-length padded strings aligning ``sm`` to ``rm``."""

    tau1: tuple
    tau2: tuple

    def __post_init__(self):
        if len(self.tau1) != len(self.tau2):
            raise ValueError("tau1 and tau2 must have equal length")
        for a, b in zip(self.tau1, self.tau2):
            if a is not STAR and b is not STAR and a != b:
                raise ValueError(f"columns {a!r} and {b!r} do not match")

    @property
    def sent(self) -> tuple:
        return tuple(c for c in self.tau1 if c is not STAR)

    @property
    def received(self) -> tuple:
        return tuple(c for c in self.tau2 if c is not STAR)

    def sc1(self) -> int:
        return sum(c is STAR for c in self.tau1)

    def sc2(self) -> int:
        return sum(c is STAR for c in self.tau2)

    def max_suffix_ratio(self):
        """Score the matching: the worst suffix-cut corruption ratio."""
        best = Fraction(0)
        num = den = 0
        for a, b in zip(reversed(self.tau1), reversed(self.tau2)):
            if a is STAR:
                num += 1
            else:
                den += 1
            if b is STAR:
                num += 1
            if den == 0:
                if num > 0:
                    return INF
                continue
            r = Fraction(num, den)
            if r > best:
                best = r
        return best


@dataclass(frozen=True)
class SuffixDistanceResult:
    value: object  # Fraction or INF
    witness: StringMatching

    @property
    def is_infinite(self) -> bool:
        return self.value == INF


def edit_distance(x: Sequence[int], y: Sequence[int]) -> int:
    """Insertion/deletion distance (no substitutions), by direct DP."""
    n = len(y)
    prev = list(range(n + 1))
    for i in range(1, len(x) + 1):
        cur = [i] + [0] * n
        xi = x[i - 1]
        for j in range(1, n + 1):
            if xi == y[j - 1]:
                cur[j] = prev[j - 1]
            else:
                cur[j] = 1 + min(prev[j], cur[j - 1])
        prev = cur
    return prev[n]


def lcs(x: Sequence[int], y: Sequence[int]) -> int:
    """Length of the longest common subsequence."""
    n = len(y)
    prev = [0] * (n + 1)
    for i in range(len(x)):
        cur = [0] * (n + 1)
        xi = x[i]
        for j in range(n):
            if xi == y[j]:
                cur[j + 1] = prev[j] + 1
            else:
                cur[j + 1] = max(prev[j + 1], cur[j])
        prev = cur
    return prev[n]


def _weights(lam: Fraction):
    # integer weights scaled by the denominator: a column contributes
    # stars - lam * (non-star sent symbols)
    p, q = lam.numerator, lam.denominator
    return -p, q - p, q


def _excess_table(sm, rm, lam: Fraction):
    """Forward DP of the least achievable max-suffix-sum at every cell.

    A matching has every suffix ratio <= lam iff its column weights have no
    positive suffix sum.  The running max suffix sum obeys
    ``D' = max(0, D + w)``, which is monotone in ``D``, so keeping only the
    minimum per cell is exact.
    """
    w_match, w_del, w_ins = _weights(lam)
    la, lb = len(sm), len(rm)
    F = [[0] * (lb + 1) for _ in range(la + 1)]
    move = [[-1] * (lb + 1) for _ in range(la + 1)]
    for b in range(1, lb + 1):
        F[0][b] = F[0][b - 1] + w_ins
        move[0][b] = INS
    for a in range(1, la + 1):
        F[a][0] = max(0, F[a - 1][0] + w_del)
        move[a][0] = DEL
        s = sm[a - 1]
        row, up = F[a], F[a - 1]
        for b in range(1, lb + 1):
            best = max(0, up[b] + w_del)
            mv = DEL
            v = row[b - 1] + w_ins
            if v < best:
                best, mv = v, INS
            if s == rm[b - 1]:
                v = max(0, up[b - 1] + w_match)
                if v < best:
                    best, mv = v, MATCH
            row[b] = best
            move[a][b] = mv
    return F, move


def _trace(sm, rm, move) -> StringMatching:
    a, b = len(sm), len(rm)
    t1, t2 = [], []
    while a or b:
        mv = move[a][b]
        if mv == MATCH:
            a, b = a - 1, b - 1
            t1.append(sm[a])
            t2.append(rm[b])
        elif mv == DEL:
            a -= 1
            t1.append(sm[a])
            t2.append(STAR)
        else:
            b -= 1
            t1.append(STAR)
            t2.append(rm[b])
    return StringMatching(tuple(reversed(t1)), tuple(reversed(t2)))


def suffix_distance_at_most(sm, rm, lam) -> bool:
    """Decide ``SD(sm, rm) <= lam`` in O(|sm| |rm|)."""
    F, _ = _excess_table(sm, rm, as_fraction(lam))
    return F[len(sm)][len(rm)] == 0


def _candidates(la: int, lb: int):
    vals = {Fraction(p, q) for q in range(1, la + 1) for p in range(la + lb + 1)}
    return sorted(vals)


def suffix_distance(sm: Sequence[int], rm: Sequence[int]) -> SuffixDistanceResult:
    """Exact suffix distance with a minimizing matching as witness.

    Every finite suffix ratio is ``p/q`` with ``p <= |sm|+|rm|`` and
    ``1 <= q <= |sm|``; binary search over that finite set with the
    threshold DP gives the exact minimum.
    """
    sm, rm = tuple(sm), tuple(rm)
    if not sm:
        # no sent symbol can ever sit in a cut: 0 with nothing received, else infinite
        return SuffixDistanceResult(INF if rm else Fraction(0), StringMatching((STAR,) * len(rm), rm))
    cands = _candidates(len(sm), len(rm))
    F, move = _excess_table(sm, rm, cands[-1])
    if F[-1][-1] != 0:
        # no matching avoids a trailing run of insertions
        return SuffixDistanceResult(INF, _infinite_witness(sm, rm))
    lo, hi = 0, len(cands) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if suffix_distance_at_most(sm, rm, cands[mid]):
            hi = mid
        else:
            lo = mid + 1
    _, move = _excess_table(sm, rm, cands[lo])
    return SuffixDistanceResult(cands[lo], _trace(sm, rm, move))


def _infinite_witness(sm, rm) -> StringMatching:
    # any matching works; use all-deletions then all-insertions
    return StringMatching(tuple(sm) + (STAR,) * len(rm), (STAR,) * len(sm) + tuple(rm))


def suffix_distance_bruteforce(sm, rm) -> SuffixDistanceResult:
    """Enumerate every string matching and score it directly."""
    sm, rm = tuple(sm), tuple(rm)
    if len(sm) > BRUTEFORCE_CAP or len(rm) > BRUTEFORCE_CAP:
        raise ValueError(f"brute force is capped at length {BRUTEFORCE_CAP}")

    best = [INF, None]
    t1: list = []
    t2: list = []

    # builds matchings from the right end so the running suffix maximum is
    # available at every step
    def walk(a, b, num, den, worst):
        if worst >= best[0] and best[1] is not None:
            return
        if a == 0 and b == 0:
            best[0] = worst
            best[1] = StringMatching(tuple(reversed(t1)), tuple(reversed(t2)))
            return
        options = []
        if a and b and sm[a - 1] == rm[b - 1]:
            options.append((a - 1, b - 1, sm[a - 1], rm[b - 1], 0, 1))
        if a:
            options.append((a - 1, b, sm[a - 1], STAR, 1, 1))
        if b:
            options.append((a, b - 1, STAR, rm[b - 1], 1, 0))
        for na, nb, c1, c2, dn, dd in options:
            n2, d2 = num + dn, den + dd
            if d2 == 0:
                r = INF
            else:
                r = Fraction(n2, d2)
            t1.append(c1)
            t2.append(c2)
            walk(na, nb, n2, d2, max(worst, r))
            t1.pop()
            t2.pop()

    walk(len(sm), len(rm), 0, 0, Fraction(0))
    return SuffixDistanceResult(best[0], best[1])


class SuffixThresholdTracker:
    """Incremental ``SD(sm, rm) <= lam`` test for strings that only grow.

    Appending a sent symbol adds a DP row, appending a received symbol adds
    a column; each costs time linear in the other string's length.
    """

    def __init__(self, lam):
        self.lam = as_fraction(lam)
        self._w = _weights(self.lam)
        self.sm: list = []
        self.rm: list = []
        self._rows = [[0]]

    def add_received(self, sym) -> None:
        w_match, w_del, w_ins = self._w
        self.rm.append(sym)
        b = len(self.rm)
        rows = self._rows
        rows[0].append(rows[0][b - 1] + w_ins)
        for a in range(1, len(rows)):
            best = max(0, rows[a - 1][b] + w_del)
            v = rows[a][b - 1] + w_ins
            if v < best:
                best = v
            if self.sm[a - 1] == sym:
                v = max(0, rows[a - 1][b - 1] + w_match)
                if v < best:
                    best = v
            rows[a].append(best)

    def add_sent(self, sym) -> None:
        w_match, w_del, w_ins = self._w
        self.sm.append(sym)
        up = self._rows[-1]
        row = [max(0, up[0] + w_del)]
        for b in range(1, len(self.rm) + 1):
            best = max(0, up[b] + w_del)
            v = row[b - 1] + w_ins
            if v < best:
                best = v
            if sym == self.rm[b - 1]:
                v = max(0, up[b - 1] + w_match)
                if v < best:
                    best = v
            row.append(best)
        self._rows.append(row)

    def within(self) -> bool:
        return self._rows[-1][-1] == 0


def ed_tail_empirical(x, n, alphabet, alpha, samples, seed) -> float:
    """Fraction of uniform ``y`` of length ``n`` with ``ED(x, y) <= alpha*|x|``."""
    x = tuple(int(c) for c in x)
    if alphabet < 4:
        raise ValueError("alphabet must have at least 4 symbols")
    if len(x) < n:
        raise ValueError("need |x| >= n")
    alpha = as_fraction(alpha)
    rng = np.random.default_rng(seed)
    ys = rng.integers(0, alphabet, size=(samples, n))
    limit = alpha * len(x)
    hits = sum(edit_distance(x, y.tolist()) <= limit for y in ys)
    return hits / samples


def random_tail_bound(alphabet: int, alpha, m: int) -> float:
    """The tail bound ``|alphabet| ** (-(1 - alpha) m / 2)``."""
    return float(alphabet) ** (-(1 - float(as_fraction(alpha))) * m / 2)

