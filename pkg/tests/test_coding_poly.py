from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from indelcoding.channel import adversary_none
from indelcoding.coding_poly import (
    PolyParty,
    guarantee_margin,
    in_guaranteed_regime,
    pack,
    poly_config,
    poly_relaxed_config,
    relaxed_rho_sup,
    unpack,
)
from indelcoding.harness import simulate
from indelcoding.pjp import ALICE, BOB, generate_instance, grandchild_index, rootless_index

CFG = poly_relaxed_config(4, 64, Fraction(9, 10))


@given(st.integers(0, 500), st.integers(1, 4))
def test_pack_round_trip(n, s):
    assert unpack(pack(n, s)) == (n, s)


def test_strict_config_depth_sixteen():
    cfg = poly_config(16, Fraction(1, 32))
    assert cfg.N == 32
    assert cfg.alpha == Fraction(31, 32)
    assert cfg.rho == Fraction(1, 18) - Fraction(1, 32)


def test_strict_config_rejects_large_eps():
    with pytest.raises(ValueError):
        poly_config(4, Fraction(1, 10))


def test_rate_vanishes_near_the_limit():
    assert poly_config(4, Fraction(1, 18) - Fraction(1, 10**6)).rho < Fraction(1, 10**5)


def test_relaxed_supremum_at_half():
    assert relaxed_rho_sup(Fraction(1, 2)) == Fraction(1, 34)
    assert guarantee_margin(34, Fraction(1, 2), Fraction(1, 34)) == 0


def test_relaxed_config_picks_largest_budget():
    assert CFG.rho == Fraction(3, 64) and CFG.budget == 6
    assert in_guaranteed_regime(CFG)
    assert not in_guaranteed_regime(poly_relaxed_config(4, 64, Fraction(9, 10), Fraction(4, 64)))


@pytest.mark.parametrize("seed", range(10))
def test_noiseless_depth_four(seed):
    log = simulate(CFG, generate_instance(4, seed), adversary_none())
    leaf = generate_instance(4, seed).leaf
    assert log.outputs == {ALICE: leaf, BOB: leaf}


def _pair(seed=3):
    inst = generate_instance(4, seed)
    a, b = PolyParty(ALICE, inst, CFG), PolyParty(BOB, inst, CFG)
    a.bind(b)
    b.bind(a)
    return inst, a, b


def test_each_round_extends_the_path_by_one_owned_edge():
    inst, a, b = _pair()
    p = inst.path_edges()
    s1 = a.step(None)
    assert unpack(a.sent_inputs[-1]) == (0, rootless_index(p[0]))
    s2 = b.step(s1)
    assert unpack(b.sent_inputs[-1]) == (0, rootless_index(p[1]))
    s3 = a.step(s2)
    # third edge links back to Alice's round 1, where its grandparent went out
    assert unpack(a.sent_inputs[-1]) == (1, grandchild_index(p[0], p[2]))
    b.step(s3)
    assert unpack(b.sent_inputs[-1]) == (1, grandchild_index(p[1], p[3]))
    assert b.info.vote == inst.leaf


def test_forward_pointer_invalidates_the_message():
    inst, a, b = _pair()
    assert b.decode_edges([pack(1, 1)]) == set()
    assert b.decode_edges([pack(0, 1), pack(5, 1)]) == set()
    assert b.decode_edges([pack(0, 2)]) == {(1,)}


def test_pointer_to_empty_edge_is_invalid():
    inst, a, b = _pair()
    empty = pack(CFG.N, 1)
    assert b.decode_edges([empty]) == set()
    assert b.decode_edges([empty, pack(1, 1)]) == set()


def test_invalid_message_gets_empty_edge_reply():
    inst, a, b = _pair()
    b.oracle.decode = lambda received: [pack(2, 1)]
    b.step(123)
    assert b.sent_inputs[-1] == pack(CFG.N, 1)
    assert b.info.edge is None


symbols = st.builds(pack, st.integers(0, 6), st.integers(1, 4))


@given(st.lists(st.lists(symbols, max_size=6), min_size=1, max_size=6))
def test_cached_decoding_matches_fresh_decoding(messages):
    inst = generate_instance(4, 1)
    cfg = poly_relaxed_config(4, 6, Fraction(9, 10), Fraction(0))
    warm = PolyParty(BOB, inst, cfg)
    for m in messages:
        assert warm.decode_edges(m) == PolyParty(BOB, inst, cfg).decode_edges(m)
