"""The polynomial-alphabet coding scheme.

Each round a party sends one input symbol ``(n, s)`` packed as
``4*n + (s - 1)``: ``n`` points back to an earlier own round in which the
grandparent edge was sent and ``s`` picks one of its four grandchildren.
``n = 0`` marks a first- or second-level edge, ``n = N`` the empty edge.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional

from ._party import PartyBase, ProtocolConfig, StepInfo
from .metrics import as_fraction
from .pjp import grandchild_index, resolve_grandchild, rootless_index


def pack(n: int, s: int) -> int:
    return 4 * n + (s - 1)


def unpack(sym: int):
    n, r = divmod(sym, 4)
    return n, r + 1


class PolyParty(PartyBase):
    def __init__(self, name, instance, cfg: ProtocolConfig, tree=None):
        super().__init__(name, instance, cfg, tree)
        self.first_sent: dict = {}  # own edge -> earliest round it was sent
        self._cp_name = "B" if name == "A" else "A"
        self._cache_syms: list = []
        self._cache_edges: list = []  # per position: edge, "empty", or absent when invalid
        self._cache_valid = True
        self._cache_bad = None  # the symbol that broke the cached prefix

    def empty_symbol(self) -> int:
        return pack(self.cfg.N, 1)

    def encode_edge(self, e: Optional[tuple]) -> int:
        if e is None:
            return self.empty_symbol()
        if len(e) <= 2:
            return pack(0, rootless_index(e))
        return pack(self.first_sent[e[:-2]], grandchild_index(e[:-2], e))

    def _resolve(self, j: int, sym: int):
        n, s = unpack(sym)
        N = self.cfg.N
        if n == N:
            return "empty"
        if n == 0:
            return resolve_grandchild(None, s, self.T, self._cp_name)
        if n >= j:
            raise ValueError("pointer to a later round")
        ref = self._cache_edges[n - 1]
        if ref == "empty":
            raise ValueError("pointer to an empty edge")
        return resolve_grandchild(ref, s, self.T)

    def decode_edges(self, decoded) -> set:
        """Edge set named by a decoded message; empty if any symbol is invalid."""
        k = len(self._cache_syms)
        if decoded[:k] != self._cache_syms:
            self._cache_syms, self._cache_edges, self._cache_valid = [], [], True
        elif not self._cache_valid and (len(decoded) <= k or decoded[k] != self._cache_bad):
            self._cache_valid = True
        while self._cache_valid and len(self._cache_syms) < len(decoded):
            j = len(self._cache_syms) + 1
            sym = decoded[j - 1]
            try:
                item = self._resolve(j, sym)
            except ValueError:
                self._cache_valid, self._cache_bad = False, sym
                break
            self._cache_syms.append(sym)
            self._cache_edges.append(item)
        if not self._cache_valid:
            return set()
        return {e for e in self._cache_edges[: len(decoded)] if e != "empty"}

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
        e = self.next_edge(path, lambda gp: gp in self.first_sent) if path is not None else None
        sym = self.encode_edge(e)
        if e is not None:
            self.first_sent.setdefault(e, self.round)
            info.edge = e
        self.maybe_output(info)
        self.info = info
        return self.emit(sym)


def poly_config(T: int, eps, out_alphabet_size: int = 256, tree_seed: int = 0) -> ProtocolConfig:
    """Parameters of the guaranteed construction for ``0 < eps < 1/18``."""
    eps = as_fraction(eps)
    if not 0 < eps < Fraction(1, 18):
        raise ValueError("eps must lie strictly between 0 and 1/18")
    N = math.ceil(T / (16 * eps))
    return ProtocolConfig("poly", T, N, 1 - eps, Fraction(1, 18) - eps, eps,
                          out_alphabet_size=out_alphabet_size, tree_seed=tree_seed)


def relaxed_rho_sup(alpha) -> Fraction:
    """Supremum of noise rates with ``1 - 16 rho/alpha - 2 rho > 0``."""
    alpha = as_fraction(alpha)
    return 1 / (16 / alpha + 2)


def guarantee_margin(N, alpha, rho) -> Fraction:
    """``N (1 - 16 rho/alpha - 2 rho)``; correctness is guaranteed when it exceeds T."""
    alpha, rho = as_fraction(alpha), as_fraction(rho)
    return N * (1 - 16 * rho / alpha - 2 * rho)


def poly_relaxed_config(T: int, N: int, alpha, rho=None, out_alphabet_size: int = 256,
                        tree_seed: int = 0) -> ProtocolConfig:
    """Desk-scale configuration for a tree of achieved distance ``alpha``.

    Without ``rho`` the largest rate of the form ``k/(2N)`` whose margin
    still exceeds ``T`` is chosen (``k`` is then the corruption budget).
    """
    alpha = as_fraction(alpha)
    if rho is None:
        k = 0
        while guarantee_margin(N, alpha, Fraction(k + 1, 2 * N)) > T:
            k += 1
        rho = Fraction(k, 2 * N)
    return ProtocolConfig("poly", T, N, alpha, as_fraction(rho), 1 - alpha,
                          out_alphabet_size=out_alphabet_size, tree_seed=tree_seed)


def in_guaranteed_regime(cfg: ProtocolConfig) -> bool:
    return guarantee_margin(cfg.N, cfg.alpha, cfg.rho) > cfg.T
