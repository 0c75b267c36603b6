"""Entropy dimension of planar projections, with and without rotations.

The rotated pair has an irrational rotation angle, so in the limit every
projection keeps the dimension log2/log3; at these finite scales the
per-angle estimates scatter around it. The product Cantor set has no
rotations: generic directions reach 1 while the axis directions drop to
log2/log3.
"""

import math

import numpy as np

from confdim.conformal import Similarity
from confdim.dimension import projection_sweep
from confdim.gibbs import Potential, sample_cloud

N = 200_000
grid = np.geomspace(3.0**-9, 3.0**-4, 6)
angles = np.array([0.0, math.pi / 4, math.pi / 2, 1.0, 2.0])

pair = Similarity.planar([1 / 3, 1 / 3], [1.0, 1.0], [[0, 0], [2 / 3, 0]])
product = Similarity.planar([1 / 3] * 4, [0.0] * 4, [[0, 0], [2 / 3, 0], [0, 2 / 3], [2 / 3, 2 / 3]])

for name, sysm, m in [("rotated pair", pair, 2), ("product Cantor", product, 4)]:
    cloud = sample_cloud(sysm, Potential.bernoulli([1 / m] * m), N, seed=7, depth=20)
    res = projection_sweep(cloud, angles, grid)
    print(name)
    for a, e in zip(angles, res.estimates):
        print(f"  angle {a:.4f}  dim_e {e:.3f}")
print(f"log2/log3 = {math.log(2) / math.log(3):.4f}, log4/log3 = {math.log(4) / math.log(3):.4f}")
