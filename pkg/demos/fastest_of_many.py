"""
How fast is the fastest of N searchers?
=======================================

Three unit-rate hops separate the start from the target.  One walker needs
three time units on average, but the first of N walkers arrives after a time
that shrinks like N^(-1/3).  This script compares the exact finite-N mean with
the large-N formula and with a Monte Carlo run.
"""
import math

import numpy as np

import xfpt
from xfpt.builders import chain

net, query = chain(3)

# The geodesic data fix the large-N law: d jumps, weight Lambda, A = Lambda / d!
summary = xfpt.geodesic_summary(net, query)
print(f"d = {summary.d}, Lambda = {summary.Lambda}, A = {summary.A:.6f}")

print("\n       N        exact       theory    ratio")
for N in [10, 100, 10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6]:
    exact = xfpt.extreme_moment_exact(net, query, N)
    theory = xfpt.extreme_law(summary, N).mean
    print(f"{N:8d}  {exact:11.6g}  {theory:11.6g}  {exact / theory:7.4f}")

# %% The ratio approaches one slowly; the correction is about N^(-1/3).
# A simulation at N = 1000 agrees with the exact value.
N = 1000
est = xfpt.sample_extreme(net, query, N, 1, xfpt.SimConfig(seed=1, replicates=5000))
exact = xfpt.extreme_moment_exact(net, query, N)
print(f"\nMonte Carlo N={N}: {est.mean:.5f} +/- {est.stderr:.5f}   exact: {exact:.5f}")

# %% The whole law, rescaled by (AN)^(1/3), tends to a Weibull law with shape 3.
z = np.linspace(0.0, 2.5, 6)
solver = xfpt.ExactSolver(net, query)
for N in (100, 10 ** 5):
    scale = (summary.A * N) ** (-1 / 3)
    F = solver.extreme_cdf(N, 1, scale * z)
    print(f"N={N:6d}  CDF at z={z.tolist()}: {np.round(F, 4).tolist()}")
print(f"limit     {np.round(-np.expm1(-z ** 3), 4).tolist()}")

# The second-fastest walker follows a generalized gamma limit instead.
law2 = xfpt.extreme_law(summary, 10 ** 5, k=2)
print(f"\nE[T_2,N] at N=1e5: theory {law2.mean:.5f}, "
      f"exact {xfpt.extreme_moment_exact(net, query, 10 ** 5, k=2):.5f}")
print(f"check: Gamma(4/3) ~ {math.gamma(4 / 3):.4f}")
