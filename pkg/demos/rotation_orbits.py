"""Rotation orbits along periodic words: atoms versus equidistribution."""

import math

from confdim.conformal import Julia, Similarity
from confdim.dynamics import a2_verdict, density_diagnostic, orbit_sequence
from confdim.symbolic import InfiniteWord

word = InfiniteWord.periodic((0,))
cases = [
    ("pair at pi/2", Similarity.planar([1 / 3, 1 / 3], [math.pi / 2] * 2, [[0, 0], [2 / 3, 0]])),
    ("pair at 1 rad", Similarity.planar([1 / 3, 1 / 3], [1.0, 1.0], [[0, 0], [2 / 3, 0]])),
    ("Julia c=-3+i", Julia(complex(-3, 1))),
]
for name, sysm in cases:
    diag = density_diagnostic(orbit_sequence(sysm, word, 50_000))
    rep = a2_verdict(sysm, N=4096)
    print(f"{name:14s} orbit {diag.verdict:22s} clusters {diag.n_clusters:6d} "
          f"D* {diag.final_discrepancy:.2e}  A2 {rep.verdict}")
