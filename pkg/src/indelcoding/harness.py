"""Experiment driver and command-line interface.

Subcommands: ``gen-tree``, ``verify-tree``, ``sim``, ``sweep``, ``attack``
and ``selftest``.  Any option may also come from a ``key = value`` file
passed with ``--config`` (command-line flags win).  Files are written under
``$INDELCODING_OUT`` unless a path is given.

Exit codes: 0 success, 1 failed check or invariant, 2 usage error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import itertools
import math
import os
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import edtc
from ._party import ProtocolConfig
from .channel import (
    AnalysisReport,
    NoiseBudget,
    RunLog,
    adversary_burst,
    adversary_none,
    adversary_random,
    adversary_spoof_input,
    analyze_log,
    read_trace,
    run_session,
    write_trace,
)
from .coding_const import ConstParty, const_config
from .coding_poly import PolyParty, poly_config, poly_relaxed_config
from .metrics import (
    as_fraction,
    ed_tail_empirical,
    edit_distance,
    lcs,
    random_tail_bound,
    suffix_distance,
    suffix_distance_bruteforce,
)
from .pjp import ALICE, BOB, PjpInstance, _walk, generate_instance

OUT_ENV = "INDELCODING_OUT"
DEFAULT_OUT = "indelcoding-out"

SWEEP_HEADER = [
    "seed", "rho", "protocol", "N", "N_A", "N_B", "corruptions", "g_A", "b_A", "g_B", "b_B",
    "alice_correct", "bob_correct", "lemma5_slack", "lemma8_slack", "runtime_ms",
    "adversary", "audit_violations",
]


class CheckFailed(Exception):
    """A verification the command was asked to perform did not hold."""


def out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT))


# -- building blocks --------------------------------------------------------


def make_party(name: str, instance: PjpInstance, cfg: ProtocolConfig, tree=None):
    cls = PolyParty if cfg.protocol == "poly" else ConstParty
    return cls(name, instance, cfg, tree)


def build_config(protocol: str, T: int, eps=None, N=None, alpha=None, rho=None, strict=False,
                 sigma: int = 256, tree_seed: int = 0) -> ProtocolConfig:
    """Protocol parameters from user-level knobs (see the README for defaults)."""
    if protocol == "poly":
        if strict:
            cfg = poly_config(T, eps if eps is not None else Fraction(1, 32), sigma, tree_seed)
        else:
            cfg = poly_relaxed_config(T, N or 16 * T, alpha if alpha is not None else Fraction(9, 10),
                                      rho, sigma, tree_seed)
    elif protocol == "const":
        cfg = const_config(T, eps if eps is not None else Fraction(1, 4), strict, alpha, None,
                           sigma, tree_seed)
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    if rho is not None:
        cfg = dataclasses.replace(cfg, rho=as_fraction(rho))
    return cfg


def alt_instance(instance: PjpInstance) -> PjpInstance:
    """Same Alice input; Bob's choice below the first path edge is flipped."""
    v = instance.correct_path[:1]
    y = dict(instance.y_edges)
    y[v] = 1 - y[v]
    return PjpInstance(instance.T, instance.seed, instance.x_edges, y, _walk(instance.T, instance.x_edges, y))


def make_adversary(spec: str, cfg: ProtocolConfig, instance: PjpInstance, seed: int = 0):
    """Parse ``none``, ``random[:rate]``, ``burst[:start[:length[:kind]]]`` or ``spoof[:window]``."""
    parts = spec.split(":")
    kind = parts[0]
    if kind == "none":
        return adversary_none()
    if kind == "random":
        rate = float(parts[1]) if len(parts) > 1 else 0.2
        return adversary_random(rate, seed)
    if kind == "burst":
        start = int(parts[1]) if len(parts) > 1 else 0
        length = int(parts[2]) if len(parts) > 2 else cfg.budget
        how = parts[3] if len(parts) > 3 else "mixed"
        return adversary_burst(start, length, how, seed)
    if kind == "spoof":
        window = int(parts[1]) if len(parts) > 1 else min(cfg.budget, cfg.N // 3)
        return adversary_spoof_input(lambda name, inst: make_party(name, inst, cfg),
                                     alt_instance(instance), window)
    raise ValueError(f"unknown adversary {spec!r}")


def simulate(cfg: ProtocolConfig, instance: PjpInstance, adversary) -> RunLog:
    tree = cfg.tree()
    alice = make_party(ALICE, instance, cfg, tree)
    bob = make_party(BOB, instance, cfg, tree)
    return run_session(alice, bob, adversary, NoiseBudget(cfg.budget), cfg.N, cfg.decoder)


def run_one(cfg, instance_seed, adversary_spec, adv_seed=None):
    instance = generate_instance(cfg.T, instance_seed)
    adv = make_adversary(adversary_spec, cfg, instance, instance_seed if adv_seed is None else adv_seed)
    log = simulate(cfg, instance, adv)
    return log, analyze_log(log)


# -- sweeps -----------------------------------------------------------------


def sweep_row(cfg: ProtocolConfig, rho, seed: int, adversary_spec: str, timing: bool = False) -> list:
    c = dataclasses.replace(cfg, rho=as_fraction(rho))
    start = time.perf_counter()
    log, rep = run_one(c, seed, adversary_spec)
    ms = round((time.perf_counter() - start) * 1000) if timing else 0
    l8 = rep.slack("full-pages")
    return [
        seed, str(c.rho), c.protocol, c.N, rep.n_a, rep.n_b, rep.spent, rep.g_a, rep.b_a, rep.g_b,
        rep.b_b, int(rep.alice_correct), int(rep.bob_correct),
        str(rep.slack("good-decodings")), "" if l8 is None else str(l8), ms,
        log.adversary, len(rep.violations()),
    ]


def _sweep_task(task):
    return sweep_row(*task)


def sweep_rows(cfg: ProtocolConfig, rhos, seeds, adversary_spec: str, timing: bool = False,
               workers: int = 1) -> list:
    """One row per (rho, seed), ordered by rho then seed whatever the worker count."""
    tasks = [(cfg, rho, seed, adversary_spec, timing) for rho in rhos for seed in seeds]
    if workers <= 1:
        return [_sweep_task(t) for t in tasks]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(_sweep_task, tasks))


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    w.writerows(rows)
    return buf.getvalue()


def success_summary(rows) -> str:
    by = {}
    for r in rows:
        by.setdefault(r[1], []).append(r[11] and r[12])
    lines = ["rho,sessions,both_correct_rate"]
    for rho, oks in by.items():
        lines.append(f"{rho},{len(oks)},{sum(oks) / len(oks):.4f}")
    return "\n".join(lines) + "\n"


# -- the paired-world attack ------------------------------------------------


@dataclass
class AttackResult:
    N: int
    window: int
    compare_round: int
    views_identical: bool
    outputs: tuple
    correct_leaves: tuple
    spent: tuple

    @property
    def wrong_somewhere(self) -> bool:
        return any(o != c for o, c in zip(self.outputs, self.correct_leaves))


def paired_world_attack(cfg: ProtocolConfig, instance: PjpInstance) -> AttackResult:
    """Run the two worlds in which Alice's views coincide up to round 2N/3.

    World one has Bob's true input; the adversary swallows Alice's first
    N/3 sends and answers with a simulated Bob on the flipped input.  World
    two has the flipped input; Alice's sends N/3+1 .. 2N/3 are swallowed and
    answered by a fresh simulated Bob on the true input.
    """
    if cfg.N % 3:
        raise ValueError("the attack needs N divisible by 3")
    k = cfg.N // 3
    other = alt_instance(instance)
    factory = lambda name, inst: make_party(name, inst, cfg)  # noqa: E731
    world1 = simulate(cfg, instance, adversary_spoof_input(factory, other, window=k, start=0))
    world2 = simulate(cfg, other, adversary_spoof_input(factory, instance, window=k, start=k))
    r = math.ceil(Fraction(2 * cfg.N, 3))

    def view(log):
        return [ev.received for ev in log.events if ev.party == ALICE and ev.round <= r]

    return AttackResult(
        cfg.N, k, r, view(world1) == view(world2),
        (world1.outputs[ALICE], world2.outputs[ALICE]),
        (instance.leaf, other.leaf),
        (world1.spent, world2.spent),
    )


# -- self test --------------------------------------------------------------


def binary_strings(max_len, min_len=0):
    for n in range(min_len, max_len + 1):
        yield from itertools.product((0, 1), repeat=n)


def selftest_suffix_distance(max_len=5) -> int:
    """Mismatches between the DP and brute-force suffix distance."""
    bad = 0
    for sm in binary_strings(max_len):
        for rm in binary_strings(max_len):
            if suffix_distance(sm, rm).value != suffix_distance_bruteforce(sm, rm).value:
                bad += 1
    return bad


def selftest_ed_lcs(samples=100_000, max_len=8, alphabet=4, seed=0) -> int:
    rng = random.Random(seed)
    bad = 0
    for _ in range(samples):
        x = [rng.randrange(alphabet) for _ in range(rng.randrange(max_len + 1))]
        y = [rng.randrange(alphabet) for _ in range(rng.randrange(max_len + 1))]
        if edit_distance(x, y) != len(x) + len(y) - 2 * lcs(x, y):
            bad += 1
    return bad


def selftest_tail(m=8, alphabet=4, alpha=Fraction(1, 2), samples=10_000, seed=0):
    """Empirical tail next to the bound plus three binomial standard errors."""
    rng = random.Random(seed)
    x = [rng.randrange(alphabet) for _ in range(m)]
    p = ed_tail_empirical(x, m, alphabet, alpha, samples, seed)
    bound = random_tail_bound(alphabet, alpha, m)
    slack = 3 * math.sqrt(bound * (1 - bound) / samples)
    return p, bound, slack


# -- CLI --------------------------------------------------------------------


def _frac(s):
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from exc


def _seeds(s):
    out = []
    for part in s.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty seed list")
    return out


def _fracs(s):
    return [_frac(v) for v in s.split(",") if v]


def _protocol_args(p):
    p.add_argument("--protocol", choices=("poly", "const"), default="poly")
    p.add_argument("--T", type=int, default=4)
    p.add_argument("--eps", type=_frac, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--alpha", type=_frac, default=None)
    p.add_argument("--rho", type=_frac, default=None)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--sigma", type=int, default=256, help="channel alphabet size")
    p.add_argument("--tree-seed", type=int, default=0)


def _cfg_from(args) -> ProtocolConfig:
    return build_config(args.protocol, args.T, args.eps, args.N, args.alpha, args.rho, args.strict,
                        args.sigma, args.tree_seed)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="indelcoding", description=__doc__.split("\n\n")[0])
    ap.add_argument("--config", help="key = value file supplying option defaults")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-tree", help="build and verify a tree code")
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--n", type=int, default=4)
    g.add_argument("--alpha", type=_frac, default=Fraction(1, 4))
    g.add_argument("--sigma", type=int, default=16)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--max-attempts", type=int, default=100)
    g.add_argument("--random", action="store_true", help="skip rejection; report potency instead")
    g.add_argument("--delta", type=_frac, default=Fraction(1, 2))
    g.add_argument("--paths", type=int, default=None, help="sampled paths for the potency check")
    g.add_argument("--out")

    v = sub.add_parser("verify-tree", help="check a saved tree for bad lambdas and potency")
    v.add_argument("tree")
    v.add_argument("--alpha", type=_frac, default=Fraction(1, 4))
    v.add_argument("--delta", type=_frac, default=None)
    v.add_argument("--paths", type=int, default=None)

    s = sub.add_parser("sim", help="run one audited session")
    _protocol_args(s)
    s.add_argument("--adversary", default="none")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trace")
    s.add_argument("--replay", help="analyze a saved trace instead of simulating")

    w = sub.add_parser("sweep", help="grid of sessions over noise rates and seeds")
    _protocol_args(w)
    w.add_argument("--adversary", default="random:0.3")
    w.add_argument("--rhos", type=_fracs, default=[Fraction(0)])
    w.add_argument("--seeds", type=_seeds, default=list(range(10)))
    w.add_argument("--out")
    w.add_argument("--summary", action="store_true")
    w.add_argument("--timing", action="store_true", help="record wall-clock runtime (not byte-stable)")
    w.add_argument("--workers", type=int, default=1)

    a = sub.add_parser("attack", help="paired-world view-indistinguishability demonstration")
    a.add_argument("--protocol", choices=("poly", "const"), default="poly")
    a.add_argument("--T", type=int, default=4)
    a.add_argument("--N", type=int, default=48)
    a.add_argument("--eps", type=_frac, default=Fraction(1, 4))
    a.add_argument("--alpha", type=_frac, default=Fraction(9, 10))
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--sigma", type=int, default=256)

    t = sub.add_parser("selftest", help="metric oracle and statistics self-checks")
    t.add_argument("--max-len", type=int, default=5)
    t.add_argument("--samples", type=int, default=100_000)
    return ap


def _apply_config_file(ap: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = ap.parse_args(argv)
    if not args.config:
        return args
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        with open(args.config) as fh:
            parser.read_string("[options]\n" + fh.read())
    except (OSError, configparser.Error) as exc:
        ap.error(f"cannot read config {args.config}: {exc}")
    sub = next(a for a in ap._subparsers._group_actions if isinstance(a, argparse._SubParsersAction))
    subparser = sub.choices[args.command]
    known = {act.dest: act for act in subparser._actions}
    folded = {d.lower(): d for d in known}
    defaults = {}
    for key, value in parser["options"].items():
        dest = key.replace("-", "_")
        dest = dest if dest in known else folded.get(dest.lower(), dest)
        if dest not in known:
            ap.error(f"unknown config key {key!r} for {args.command}")
        act = known[dest]
        if isinstance(act, argparse._StoreTrueAction):
            defaults[dest] = value.strip().lower() in ("1", "true", "yes", "on")
        else:
            defaults[dest] = value.strip()
    subparser.set_defaults(**defaults)
    return ap.parse_args(argv)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def cmd_gen_tree(args) -> int:
    if args.random:
        tree = edtc.build_random_tree(args.d, args.n, args.sigma, args.seed)
        attempts = 1
    else:
        stats = {}
        try:
            tree = edtc.build_edtc_rejection(args.d, args.n, args.alpha, args.sigma, args.seed,
                                             args.max_attempts, stats)
        except edtc.ConstructionError as exc:
            print(f"bad-lambda-free: false after {exc.attempts} attempts")
            print(f"witness: {exc.witness}")
            return 1
        attempts = stats["attempts"]
    out = Path(args.out) if args.out else out_dir() / f"tree-d{args.d}-n{args.n}-s{args.sigma}-seed{args.seed}.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    edtc.write_tree(tree, out)
    free = edtc.find_bad_lambda(tree, args.alpha) is None
    print(f"tree: {out}")
    print(f"alpha: {args.alpha}  attempts: {attempts}")
    print(f"bad-lambda-free: {str(free).lower()}")
    if args.random or args.paths is not None:
        rep = edtc.potency_report(tree, args.alpha, args.paths, args.seed)
        ok = rep.is_potent(args.delta, tree.n)
        print(f"worst bad-interval union: {rep.bad_interval_union_length} over {rep.paths_examined} paths; "
              f"potent at delta={args.delta}: {str(ok).lower()}")
    return 0


def cmd_verify_tree(args) -> int:
    tree = edtc.read_tree(args.tree)
    lam = edtc.find_bad_lambda(tree, args.alpha)
    print(f"bad-lambda-free: {str(lam is None).lower()}")
    if lam is not None:
        print(f"witness: {lam}")
    ok = lam is None
    if args.delta is not None:
        rep = edtc.potency_report(tree, args.alpha, args.paths)
        potent = rep.is_potent(args.delta, tree.n)
        print(f"worst bad-interval union: {rep.bad_interval_union_length}; potent: {str(potent).lower()}")
        ok = potent
    return 0 if ok else 1


def _print_report(cfg: ProtocolConfig, log: RunLog, rep: AnalysisReport) -> None:
    print(f"protocol={cfg.protocol} T={cfg.T} N={cfg.N} alpha={cfg.alpha} rho={cfg.rho} "
          f"budget={cfg.budget} deadline={cfg.deadline} adversary={log.adversary}")
    print(f"correct leaf: {''.join(map(str, log.instance.leaf))}")
    for p in (ALICE, BOB):
        out = log.outputs.get(p)
        print(f"output {p}: {'none' if out is None else ''.join(map(str, out))}")
    print(rep.render())


def cmd_sim(args) -> int:
    if args.replay:
        log = read_trace(args.replay)
        cfg = log.config
    else:
        cfg = _cfg_from(args)
        instance = generate_instance(cfg.T, args.seed)
        log = simulate(cfg, instance, make_adversary(args.adversary, cfg, instance, args.seed))
        path = Path(args.trace) if args.trace else out_dir() / f"trace-{cfg.protocol}-T{cfg.T}-seed{args.seed}.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        write_trace(log, path)
        print(f"trace: {path}")
    rep = analyze_log(log)
    _print_report(cfg, log, rep)
    return 1 if rep.violations() else 0


def cmd_sweep(args) -> int:
    cfg = _cfg_from(args)
    rows = sweep_rows(cfg, args.rhos, args.seeds, args.adversary, args.timing, args.workers)
    path = Path(args.out) if args.out else out_dir() / f"sweep-{cfg.protocol}-T{cfg.T}.csv"
    _write(path, rows_to_csv(rows))
    print(f"csv: {path} ({len(rows)} rows)")
    if args.summary:
        print(success_summary(rows), end="")
    violations = sum(r[-1] for r in rows)
    print(f"audit violations: {violations}")
    return 1 if violations else 0


def cmd_attack(args) -> int:
    if args.protocol == "poly":
        cfg = poly_relaxed_config(args.T, args.N, args.alpha, Fraction(1, 6), args.sigma)
    else:
        base = const_config(args.T, args.eps, False, out_alphabet_size=args.sigma)
        cfg = dataclasses.replace(base, N=3 * math.ceil(base.N / 3), rho=Fraction(1, 6))
    instance = generate_instance(args.T, args.seed)
    res = paired_world_attack(cfg, instance)
    print(f"N={res.N} window={res.window} compared through Alice's round {res.compare_round}")
    print(f"corruptions spent per world: {res.spent[0]}, {res.spent[1]}")
    print(f"Alice's views identical: {str(res.views_identical).lower()}")
    fmt = lambda v: "none" if v is None else "".join(map(str, v))  # noqa: E731
    for w, (o, c) in enumerate(zip(res.outputs, res.correct_leaves), start=1):
        print(f"world {w}: output {fmt(o)} correct {fmt(c)} -> {'right' if o == c else 'WRONG'}")
    ok = res.views_identical and res.wrong_somewhere
    print(f"at least one world wrong: {str(res.wrong_somewhere).lower()}")
    return 0 if ok else 1


def cmd_selftest(args) -> int:
    ok = True
    bad = selftest_suffix_distance(args.max_len)
    print(f"{'PASS' if bad == 0 else 'FAIL'} suffix distance DP vs brute force up to length {args.max_len}: {bad} mismatches")
    ok &= bad == 0
    bad = selftest_ed_lcs(args.samples)
    print(f"{'PASS' if bad == 0 else 'FAIL'} ED = |x|+|y|-2 LCS on {args.samples} pairs: {bad} violations")
    ok &= bad == 0
    p, bound, slack = selftest_tail()
    good = p <= bound + slack
    print(f"{'PASS' if good else 'FAIL'} random-string edit-distance tail: {p:.4f} <= {bound:.4f} + {slack:.4f}")
    ok &= good
    return 0 if ok else 1


COMMANDS = {
    "gen-tree": cmd_gen_tree,
    "verify-tree": cmd_verify_tree,
    "sim": cmd_sim,
    "sweep": cmd_sweep,
    "attack": cmd_attack,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    ap = build_parser()
    args = _apply_config_file(ap, argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
