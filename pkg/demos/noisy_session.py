"""One audited session of each protocol under a random adversary."""

from fractions import Fraction

from indelcoding.harness import build_config, run_one

for cfg in (build_config("poly", 4, N=64, alpha=Fraction(9, 10)),
            build_config("const", 4, eps=Fraction(1, 8))):
    log, rep = run_one(cfg, 3, "random:0.5")
    print(f"{cfg.protocol}: T={cfg.T} N={cfg.N} rho={cfg.rho} budget={cfg.budget}")
    print(f"  rounds N_A={log.n_a} N_B={log.n_b}, corruptions {log.spent}")
    print(f"  outputs correct: alice={rep.alice_correct} bob={rep.bob_correct}")
    print(f"  audit checks {len(rep.checks)}, violations {len(rep.violations())}")
