"""The nine acceptance criteria, each reporting one PASS or FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are collected in
the terminal summary under "acceptance criteria" and also printed directly
(visible with ``-s``).
"""

import dataclasses
import itertools
import os
import subprocess
import sys
import time
from fractions import Fraction

from indelcoding import edtc
from indelcoding.coding_const import const_config
from indelcoding.coding_poly import in_guaranteed_regime, poly_relaxed_config
from indelcoding.harness import (
    build_config,
    paired_world_attack,
    run_one,
    selftest_ed_lcs,
    selftest_tail,
)
from indelcoding.metrics import suffix_distance, suffix_distance_bruteforce
from indelcoding.pjp import generate_instance

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a plain script
    ACCEPTANCE_LINES = []


def report(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# 1 ------------------------------------------------------------------------


def test_criterion_1_suffix_distance_oracle_equivalence():
    start = time.perf_counter()
    strings = [s for n in range(6) for s in itertools.product((0, 1), repeat=n)]
    pairs = mismatches = 0
    for sm in strings:
        for rm in strings:
            pairs += 1
            if suffix_distance(sm, rm).value != suffix_distance_bruteforce(sm, rm).value:
                mismatches += 1
    elapsed = time.perf_counter() - start
    report(1, mismatches == 0 and elapsed < 60,
           f"{pairs} binary pairs up to length 5, {mismatches} mismatches, {elapsed:.1f}s (limit 60s)")


# 2 ------------------------------------------------------------------------


def test_criterion_2_edit_distance_lcs_identity():
    bad = selftest_ed_lcs(samples=100_000, max_len=8, alphabet=4, seed=2)
    report(2, bad == 0, f"100000 sampled pairs, length <= 8, 4 letters, {bad} violations")


# 3 ------------------------------------------------------------------------


def test_criterion_3_random_string_tail_bound():
    p, bound, slack = selftest_tail(m=8, alphabet=4, alpha=Fraction(1, 2), samples=10_000, seed=3)
    report(3, p <= bound + slack,
           f"empirical Pr[ED <= m/2] = {p:.4f} <= {bound:.4f} + 3 sigma {slack:.4f} (m=n=8, 4 letters)")


# 4 ------------------------------------------------------------------------

UNIQUENESS_CASES = [
    # (n, output alphabet, alpha); at alpha=2/3 one early corruption still decodes
    (4, 8, Fraction(1, 4)),
    (3, 16, Fraction(2, 3)),
]


def test_criterion_4_tree_code_uniqueness():
    trees = violations = 0
    for n, sigma, alpha in UNIQUENESS_CASES:
        for seed in range(20):
            tree = edtc.build_edtc_rejection(2, n, alpha, sigma, seed, 500)
            assert edtc.find_bad_lambda(tree, alpha) is None
            violations += len(edtc.uniqueness_violations(tree, alpha, 5))
            trees += 1
    report(4, violations == 0 and trees >= 20,
           f"{trees} bad-lambda-free trees (n=4 alpha=1/4, n=3 alpha=2/3), "
           f"every received string up to length 5, {violations} violations")


# 5 ------------------------------------------------------------------------


def test_criterion_5_zero_noise_end_to_end():
    total = correct = 0
    for T in (2, 4, 8):
        for cfg in (build_config("poly", T, N=16 * T, alpha=Fraction(9, 10)),
                    const_config(T, Fraction(1, 4), strict=False)):
            for seed in range(50):
                _, rep = run_one(cfg, seed, "none")
                total += 1
                correct += rep.alice_correct and rep.bob_correct
    report(5, correct == total, f"{correct}/{total} noiseless sessions correct (both protocols, T in 2,4,8, 50 seeds)")


# 6 ------------------------------------------------------------------------

AUDIT_ADVERSARIES = ["random:0.5", "burst:0:1000:mixed", "burst:3:1000:out_of_sync", "burst:7:1000:substitute"]
AUDIT_FAMILIES = ["budget", "insertions-balance", "deletions-balance", "termination-skew", "good-decodings",
                  "progress-window", "cycle-window", "full-pages", "description-lengths"]


def audit_suites():
    suites = []
    for T in (2, 4, 8):
        poly = build_config("poly", T, N=16 * T, alpha=Fraction(9, 10))
        suites.append((poly, sorted({Fraction(0), Fraction(1, 64), Fraction(1, 32), poly.rho,
                                     Fraction(1, 16), Fraction(1, 8)})))
        suites.append((const_config(T, Fraction(1, 4), strict=False),
                       [Fraction(0), Fraction(1, 64), Fraction(1, 32), Fraction(1, 16)]))
    for T in (2, 4):
        c = const_config(T, Fraction(1, 8), strict=False)
        suites.append((c, [Fraction(0), c.rho]))
    return suites


def test_criterion_6_trace_level_audits():
    start = time.perf_counter()
    sessions = violations = 0
    seen = set()
    for cfg, rhos in audit_suites():
        for adv in AUDIT_ADVERSARIES:
            for rho in rhos:
                for seed in range(10):
                    c = dataclasses.replace(cfg, rho=rho)
                    _, rep = run_one(c, seed, adv)
                    sessions += 1
                    violations += len(rep.violations())
                    seen.update(f for f in AUDIT_FAMILIES for ch in rep.checks if ch.name.startswith(f))
    elapsed = time.perf_counter() - start
    missing = sorted(set(AUDIT_FAMILIES) - seen)
    ok = violations == 0 and not missing and elapsed < 600
    report(6, ok, f"{sessions} audited sessions, {violations} violations, families unexercised: "
                  f"{missing or 'none'}, {elapsed:.0f}s (limit 600s)")


# 7 ------------------------------------------------------------------------


def guaranteed_adversaries(N):
    specs = ["none", "random:0.5", "random:1.0", "spoof"]
    for start in (0, N // 2, N, 3 * N // 2):
        specs += [f"burst:{start}:1000:{kind}" for kind in ("mixed", "out_of_sync", "substitute")]
    return specs


def test_criterion_7_guaranteed_regime_correctness():
    total = correct = 0
    configs = [poly_relaxed_config(T, 16 * T, Fraction(9, 10)) for T in (2, 4, 8)]
    assert all(in_guaranteed_regime(c) and c.budget > 0 for c in configs)
    for cfg in configs:
        for adv in guaranteed_adversaries(cfg.N):
            for seed in range(20):
                _, rep = run_one(cfg, seed, adv)
                total += 1
                correct += rep.alice_correct and rep.bob_correct
    budgets = ", ".join(f"T={c.T} N={c.N} rho={c.rho}" for c in configs)
    report(7, correct == total, f"{correct}/{total} sessions correct with alpha=9/10 ({budgets}) "
                                f"against none, random, burst and spoof adversaries")


# 8 ------------------------------------------------------------------------


def test_criterion_8_paired_world_attack():
    runs = identical = wrong = charged = 0
    for T, N in ((2, 24), (4, 48), (6, 96)):
        for proto in ("poly", "const"):
            if proto == "poly":
                cfg = poly_relaxed_config(T, N, Fraction(9, 10), Fraction(1, 6))
            else:
                base = const_config(T, Fraction(1, 4), strict=False)
                cfg = dataclasses.replace(base, N=N, rho=Fraction(1, 6))
            for seed in range(5):
                res = paired_world_attack(cfg, generate_instance(T, seed))
                runs += 1
                identical += res.views_identical
                wrong += res.wrong_somewhere
                charged += res.spent == (N // 3, N // 3)
    report(8, identical == wrong == charged == runs,
           f"{runs} paired runs: views identical at round 2N/3 in {identical}, "
           f"a wrong output in {wrong}, budget N/3 spent exactly in {charged}")


# 9 ------------------------------------------------------------------------


def _cli(args, out, hash_seed):
    env = dict(os.environ, INDELCODING_OUT=str(out), PYTHONHASHSEED=str(hash_seed))
    subprocess.run([sys.executable, "-m", "indelcoding", *args], env=env, check=True,
                   stdout=subprocess.DEVNULL)
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_criterion_9_determinism(tmp_path):
    commands = [
        ["gen-tree", "--d", "2", "--n", "4", "--alpha", "0.25", "--sigma", "16", "--seed", "7"],
        ["sim", "--protocol", "poly", "--T", "4", "--N", "64", "--adversary", "random:0.4", "--seed", "2"],
        ["sim", "--protocol", "const", "--T", "4", "--adversary", "burst:5:20:mixed", "--seed", "1"],
        ["sweep", "--protocol", "poly", "--T", "2", "--rhos", "0,1/32,1/16", "--seeds", "0-4"],
    ]
    first = second = None
    for run, hash_seed in ((0, 1), (1, 2)):
        out = tmp_path / f"run{run}"
        out.mkdir()
        files = {}
        for cmd in commands:
            files.update(_cli(cmd, out, hash_seed))
        if first is None:
            first = files
        else:
            second = files
    same = first == second and len(first) == 4
    report(9, same, f"{len(first)} artifacts (tree, two traces, CSV) byte-identical across two runs "
                    "with different hash seeds")


if __name__ == "__main__":
    import pytest

    sys.exit(pytest.main([__file__, "-v"]))
