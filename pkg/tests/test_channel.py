import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indelcoding.channel import (
    DELIVER,
    Adversary,
    BudgetExceeded,
    NoiseBudget,
    RunLog,
    adversary_burst,
    adversary_none,
    adversary_random,
    adversary_spoof_input,
    analyze_log,
    matchings,
    out_of_sync,
    read_trace,
    run_session,
    substitute,
    write_trace,
)
from indelcoding.harness import alt_instance, build_config, make_party, simulate
from indelcoding.metrics import STAR
from indelcoding.pjp import ALICE, BOB, generate_instance

CFG = build_config("poly", 2, N=24, alpha=Fraction(9, 10), rho=Fraction(1, 6))  # budget 8


class Scripted(Adversary):
    """Apply a fixed action at chosen transmission indices."""

    def __init__(self, plan):
        self.plan = plan
        self.name = "scripted"

    def decide(self, ctx):
        return self.plan.get(ctx.index, DELIVER)


def run(adv, cfg=CFG, seed=0, budget=None):
    inst = generate_instance(cfg.T, seed)
    a, b = make_party(ALICE, inst, cfg), make_party(BOB, inst, cfg)
    return run_session(a, b, adv, NoiseBudget(cfg.budget if budget is None else budget), cfg.N)


def test_zero_noise_alternates_strictly():
    log = run(adversary_none())
    assert log.n_a == log.n_b == CFG.N
    assert log.spent == 0
    assert [e.party for e in log.events] == [ALICE, BOB] * CFG.N
    assert all(e.decode_ok and e.genuine for e in log.events)
    assert log.final_in_flight[0] == BOB


def test_one_out_of_sync_against_bob():
    log = run(Scripted({0: out_of_sync(5)}))
    assert (log.n_a, log.n_b) == (CFG.N, CFG.N - 1)
    assert log.spent == 1
    assert log.events[1].party == ALICE and not log.events[1].genuine


def test_substitution_keeps_round_counts():
    log = run(Scripted({0: substitute(5), 3: substitute(7)}))
    assert (log.n_a, log.n_b) == (CFG.N, CFG.N)
    assert log.spent == 2


def test_out_of_sync_to_halted_sender_is_delivered():
    # a burst covering the tail keeps desynchronizing; the run must still end
    # with the skew bounded by the corruptions actually charged
    log = run(adversary_burst(2 * CFG.N - 12, 100, "out_of_sync"), budget=100)
    assert abs(log.n_a - log.n_b) <= log.spent
    assert max(log.n_a, log.n_b) == CFG.N


def test_over_budget_adversary_is_stopped():
    with pytest.raises(BudgetExceeded):
        run(Scripted({0: substitute(1), 1: substitute(1)}), budget=1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.05, 1.0))
def test_corruption_accounting(seed, rate):
    log = run(adversary_random(rate, seed), seed=seed % 7)
    k = log.spent
    assert k <= CFG.budget
    assert min(log.n_a, log.n_b) >= CFG.N - k
    tau_a, tau_b = matchings(log)
    assert tau_a.sc1() + tau_b.sc1() == k
    assert tau_a.sc2() + tau_b.sc2() == k
    # received sides are exactly what each party consumed
    assert tau_a.received == tuple(e.received for e in log.events if e.party == ALICE and e.received is not None)
    assert tau_b.received == tuple(e.received for e in log.events if e.party == BOB)
    bob_sent = [e.sent for e in log.events if e.party == BOB]
    assert list(tau_a.sent) == bob_sent[: len(tau_a.sent)]
    assert len(log.events) == log.n_a + log.n_b


def test_rate_one_spends_whole_budget_first():
    log = run(adversary_random(1.0, 3))
    assert log.spent == CFG.budget
    kinds = [x.kind for x in log.transmissions]
    assert all(k != "deliver" for k in kinds[: CFG.budget])
    assert all(k == "deliver" for k in kinds[CFG.budget:])


@pytest.mark.parametrize("w", [0, 3, 8, 20])
def test_burst_spends_min_of_window_and_budget(w):
    log = run(adversary_burst(4, w, "substitute"))
    assert log.spent == min(w, CFG.budget)


def test_spoofed_prefix_is_alt_transcript():
    cfg = build_config("poly", 4, N=48, alpha=Fraction(9, 10), rho=Fraction(1, 6))
    inst = generate_instance(4, 2)
    other = alt_instance(inst)
    factory = lambda name, i: make_party(name, i, cfg)  # noqa: E731
    k = cfg.N // 3
    attacked = simulate(cfg, inst, adversary_spoof_input(factory, other, window=k))
    honest_alt = simulate(cfg, other, adversary_none())
    got = [e.received for e in attacked.events if e.party == ALICE][1 : k + 1]
    want = [e.received for e in honest_alt.events if e.party == ALICE][1 : k + 1]
    assert got == want
    assert attacked.spent == math.floor(cfg.N / 3)


def test_alt_instance_moves_the_leaf():
    inst = generate_instance(4, 5)
    other = alt_instance(inst)
    assert other.x_edges == inst.x_edges
    assert other.leaf != inst.leaf
    assert other.leaf[0] == inst.leaf[0]


def test_trace_round_trip_and_replay(tmp_path):
    log = run(adversary_random(0.4, 9))
    p = tmp_path / "t.jsonl"
    write_trace(log, p)
    back = read_trace(p)
    assert back.dumps() == log.dumps()
    assert analyze_log(back).to_dict() == analyze_log(log).to_dict()
    assert matchings(back) == matchings(log)


def test_trace_without_header_is_rejected():
    with pytest.raises(ValueError):
        RunLog.loads('{"type": "event"}\n')


def test_budget_for_rate():
    assert NoiseBudget.for_rate(Fraction(1, 6), 24).total == 8


def test_noiseless_audit_is_clean():
    log = run(adversary_none())
    rep = analyze_log(log)
    assert rep.violations() == []
    assert rep.sc == (0, 0, 0, 0)
    assert rep.milestones[-1] is not None
    assert rep.alice_correct and rep.bob_correct


def test_matching_columns_for_each_action():
    log = run(Scripted({0: substitute(9), 1: out_of_sync(4)}))
    tau_a, tau_b = matchings(log)
    first_a = log.transmissions[0].symbol
    first_b = log.transmissions[1].symbol
    assert tau_b.tau1[:2] == (first_a, STAR) and tau_b.tau2[:2] == (STAR, 9)
    assert (tau_a.tau1[0], tau_a.tau2[0]) == (first_b, STAR)
    assert (STAR, 4) in zip(tau_b.tau1, tau_b.tau2)
