"""Tensor-train basics: compression, rounding, arithmetic, integration.

A separable (or nearly separable) multivariate array compresses to a chain
of small 3-way cores. This script builds one from a dense array, inspects
the ranks, rounds it harder, and integrates it, comparing everything against
plain numpy.
"""

import numpy as np

from ttflow import (tt_add, tt_from_dense, tt_hadamard, tt_integrate,
                    tt_round, tt_scale)

rng = np.random.default_rng(0)

# a 3-d grid function with low "interaction rank":
# f(x,y,z) = exp(-x^2-y^2-z^2) + 0.1 * sin(x) * cos(y) * z
n = 40
x = np.linspace(-3, 3, n)
X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
dense = np.exp(-X**2 - Y**2 - Z**2) + 0.1 * np.sin(X) * np.cos(Y) * Z

t = tt_from_dense(dense, tol=1e-12)
print("dense entries:", dense.size)
print("TT ranks:", t.ranks)
print("TT parameters:", sum(c.size for c in t.cores))

# reconstruction error at a handful of random indices
idx = rng.integers(0, n, size=(5, 3))
from ttflow import tt_eval
err = np.abs(tt_eval(t, idx) - dense[idx[:, 0], idx[:, 1], idx[:, 2]]).max()
print("max abs reconstruction error:", err)

# rounding trades accuracy for rank
for tol in (1e-12, 1e-6, 1e-2):
    r = tt_round(t, tol)
    print(f"round tol {tol:.0e} -> ranks {r.ranks}")

# arithmetic stays in TT form: ranks add under +, multiply under *
s = tt_add(t, tt_scale(t, 2.0))
h = tt_hadamard(t, t)
print("ranks after add:", s.ranks, " after hadamard:", h.ranks)
print("rounded back:", tt_round(s, 1e-12).ranks)

# integration contracts each core with a weight vector, one mode at a time
w = np.full(n, x[1] - x[0])  # simple Riemann weights on the uniform grid
total = tt_integrate(t, [w, w, w])
print("TT integral:", total)
print("numpy sum:  ", dense.sum() * (x[1] - x[0]) ** 3)
