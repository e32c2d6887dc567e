"""Build a small edit-distance tree code by rejection sampling and decode a
codeword that lost a symbol.  A potency report for a larger random tree is
printed along the way.
"""

from fractions import Fraction

from indelcoding import edtc

ALPHA = Fraction(1, 4)

stats = {}
tree = edtc.build_edtc_rejection(2, 4, ALPHA, 16, seed=7, max_attempts=200, stats=stats)
print(f"bad-lambda-free tree (d=2 n=4 sigma=16) found after {stats['attempts']} attempt(s)")

rough = edtc.build_random_tree(2, 8, 8, seed=1)
rep = edtc.potency_report(rough, ALPHA, paths=5, seed=0)
print(f"random tree d=2 n=8 sigma=8: worst bad-interval union {rep.bad_interval_union_length} "
      f"over {rep.paths_examined} paths, potent at delta=1/2: {rep.is_potent(Fraction(1, 2), 8)}")

message = (1, 0, 1, 1)
codeword = [edtc.encode_step(tree, message[: i + 1]) for i in range(len(message))]
received = codeword[:2] + [codeword[3]]  # third symbol deleted
print(f"codeword {codeword}, received {received}")
print("exact decoder:", edtc.decode_exact(tree, received, ALPHA))
