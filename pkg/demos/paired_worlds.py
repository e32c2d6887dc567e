"""Two worlds that the victim cannot tell apart at round 2N/3.

With a budget of N/3 corruptions the adversary replays a simulated
counterpart holding the other input, so any output forced at that round is
wrong in one of the two worlds.
"""

from fractions import Fraction

from indelcoding.coding_poly import poly_relaxed_config
from indelcoding.harness import paired_world_attack
from indelcoding.pjp import generate_instance

cfg = poly_relaxed_config(4, 48, Fraction(9, 10), Fraction(1, 6))
for seed in range(3):
    res = paired_world_attack(cfg, generate_instance(4, seed))
    print(f"seed {seed}: identical views at round {res.compare_round}: {res.views_identical}; "
          f"outputs {res.outputs} vs correct {res.correct_leaves}; spent {res.spent}")
