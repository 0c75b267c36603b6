"""Pressure, Bowen roots and exact Gibbs weights for a few small systems."""

import math

import numpy as np

from confdim.conformal import Julia, Similarity
from confdim.gibbs import Potential, bowen_root, cylinder_weights, pressure, pressure_exact

pair = Similarity.planar([1 / 3, 1 / 3], [1.0, 1.0], [[0, 0], [2 / 3, 0]])
uneven = Similarity.planar([0.5, 0.25], [0.0, 0.0], [[0, 0], [0.75, 0]])
julia = Julia(complex(-3, 1))

for name, sysm in [("ratio-1/3 pair", pair), ("ratios 1/2, 1/4", uneven), ("Julia c=-3+i", julia)]:
    print(f"{name:18s} Bowen root {bowen_root(sysm):.9f}")
print(f"{'log 2 / log 3':18s}            {math.log(2) / math.log(3):.9f}")

# pressure of a non-product potential against its transfer-matrix eigenvalue
table = np.array([[0.1, -0.4], [-0.7, 0.3]])
phi = Potential.markov(table)
print(f"markov pressure {pressure(phi).P_hat:.12f}, log Perron eigenvalue {pressure_exact(phi):.12f}")

w = cylinder_weights(phi, 3)
print("level-3 Gibbs weights:", np.round(w.weights, 4), "sum", w.weights.sum())
