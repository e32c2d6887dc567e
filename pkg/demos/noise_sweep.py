"""Success rate of the polynomial-alphabet protocol as the noise rate grows.

Rates past the guaranteed regime are included on purpose: bursts there can
make the parties fail, while the audits keep holding.
"""

from fractions import Fraction

from indelcoding.harness import build_config, success_summary, sweep_rows

cfg = build_config("poly", 4, N=64, alpha=Fraction(9, 10))
rhos = [Fraction(0), Fraction(1, 32), cfg.rho, Fraction(1, 8), Fraction(1, 4)]
for adversary in ("random:1.0", "burst:0:1000:mixed"):
    print(f"adversary {adversary}")
    print(success_summary(sweep_rows(cfg, rhos, range(20), adversary)))
