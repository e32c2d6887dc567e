"""The pointer-jumping problem on a complete binary tree of even depth T.

Vertices and edges are both named by bit tuples: a vertex is its path from
the root, and an edge is named by its lower endpoint, so an edge at depth k
is a k-tuple.  Alice owns the edges leaving even-depth vertices (odd-depth
edges), Bob owns the edges leaving odd-depth vertices (even-depth edges).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

ALICE, BOB = "A", "B"


def owner(edge) -> str:
    """Which party holds ``edge`` in its input."""
    if not edge:
        raise ValueError("the root is not an edge")
    return ALICE if len(edge) % 2 == 1 else BOB


def vertices_at(depth: int):
    """All vertices at ``depth`` in lexicographic order."""
    out = [()]
    for _ in range(depth):
        out = [v + (b,) for v in out for b in (0, 1)]
    return out


@dataclass(frozen=True)
class PjpInstance:
    T: int
    seed: int
    x_edges: dict  # even-depth vertex -> chosen child bit
    y_edges: dict  # odd-depth vertex -> chosen child bit
    correct_path: tuple  # the leaf reached, as T bits

    def edges_of(self, party: str) -> dict:
        return self.x_edges if party == ALICE else self.y_edges

    def path_edges(self) -> list:
        return [self.correct_path[:k] for k in range(1, self.T + 1)]

    @property
    def leaf(self) -> tuple:
        return self.correct_path


def _walk(T, x_edges, y_edges) -> tuple:
    v = ()
    while len(v) < T:
        choice = x_edges if len(v) % 2 == 0 else y_edges
        v = v + (choice[v],)
    return v


def generate_instance(T: int, seed: int) -> PjpInstance:
    """Uniformly random consistent inputs, one RNG draw per vertex in level order."""
    if T < 2 or T % 2:
        raise ValueError("T must be an even integer >= 2")
    rng = random.Random(seed)
    x, y = {}, {}
    for depth in range(T):
        side = x if depth % 2 == 0 else y
        for v in vertices_at(depth):
            side[v] = rng.randrange(2)
    return PjpInstance(T, seed, x, y, _walk(T, x, y))


def noiseless_reference(instance: PjpInstance) -> tuple:
    """Run T alternating rounds, each revealing the next path edge."""
    known = ()
    for r in range(instance.T):
        speaker = instance.x_edges if r % 2 == 0 else instance.y_edges
        known = known + (speaker[known],)
    return known


def grandchild_index(parent, child) -> int:
    parent, child = tuple(parent), tuple(child)
    if len(child) != len(parent) + 2 or child[: len(parent)] != parent:
        raise ValueError(f"{child} is not a grandchild of {parent}")
    return 2 * child[-2] + child[-1] + 1


def rootless_index(edge) -> int:
    """Index of a first- or second-level edge within its owner's enumeration."""
    edge = tuple(edge)
    if len(edge) == 1:
        return edge[0] + 1
    if len(edge) == 2:
        return 2 * edge[0] + edge[1] + 1
    raise ValueError("only first- and second-level edges are rootless")


def resolve_grandchild(parent: Optional[tuple], s: int, T: int, party: str = ALICE) -> tuple:
    """Inverse of :func:`grandchild_index`.

    With ``parent=None`` the edge is rootless: for Alice ``s`` in {1, 2}
    picks a root edge, for Bob ``s`` in [4] picks a second-level edge in
    lexicographic order of (first bit, second bit).
    """
    if not 1 <= s <= 4:
        raise ValueError(f"grandchild index {s} outside [4]")
    b1, b2 = divmod(s - 1, 2)
    if parent is None:
        if party == ALICE:
            if s > 2:
                raise ValueError("Alice's rootless index must be 1 or 2")
            return (s - 1,)
        edge = (b1, b2)
    else:
        edge = tuple(parent) + (b1, b2)
    if len(edge) > T:
        raise ValueError(f"edge depth {len(edge)} exceeds T={T}")
    return edge


# -- serialization ----------------------------------------------------------


def _bits(instance_map, parity, T) -> str:
    return "".join(str(instance_map[v]) for d in range(parity, T, 2) for v in vertices_at(d))


def dumps_instance(instance: PjpInstance) -> str:
    return "\n".join(
        [
            f"{instance.T} {instance.seed}",
            _bits(instance.x_edges, 0, instance.T),
            _bits(instance.y_edges, 1, instance.T),
        ]
    ) + "\n"


def loads_instance(text: str) -> PjpInstance:
    rows = text.strip("\n").split("\n")
    T, seed = (int(v) for v in rows[0].split())
    maps = []
    for parity, row in ((0, rows[1]), (1, rows[2])):
        it = iter(row)
        maps.append({v: int(next(it)) for d in range(parity, T, 2) for v in vertices_at(d)})
        if next(it, None) is not None:
            raise ValueError("trailing bits in instance map")
    return PjpInstance(T, seed, maps[0], maps[1], _walk(T, maps[0], maps[1]))
