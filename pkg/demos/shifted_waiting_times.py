"""
Waiting times with a minimum delay
==================================

Each jump of this two-edge chain takes at least one time unit and then an
extra exponential delay.  No walker can arrive before t = 2, and the fastest of
N walkers beats that bound by an amount that shrinks like N^(-1/2).  General
waiting laws have no exact solver, so the check is by simulation.
"""
import math

import numpy as np

import xfpt
from xfpt.builders import shifted_chain

net, query = shifted_chain(2, t0=1.0, c=2.0, r=1.0)
s = xfpt.geodesic_summary(net, query)
print(f"t_min = {s.t_min}, d = {s.d}, A = {s.A}")

for N in (10 ** 2, 10 ** 3, 10 ** 4):
    est = xfpt.sample_extreme(net, query, N, 1, xfpt.SimConfig(seed=1, replicates=4000))
    law = xfpt.extreme_law(s, N)
    excess = est.mean - s.t_min
    # law.mean is the mean of T_N - t_min; law.first_order_mean adds t_min back.
    print(f"N={N:6d}  E[T_N] - 2 = {excess:.5f} +/- {est.stderr:.5f}   "
          f"theory {law.mean:.5f}   ratio {excess / law.mean:.3f}")

# Short-time law of a single walker: P(tau <= 2 + t) ~ A t^2.
t = np.sort(xfpt.sample_fpts(net, query, 10 ** 6, seed=2)) - s.t_min
for n_hits in (100, 1000, 10000):
    dt = t[n_hits - 1]
    print(f"{n_hits:6d} hits by 2+{dt:.4f}: empirical/A t^2 = {n_hits / t.size / (s.A * dt ** 2):.3f}")

print(f"median of T_100 from the limit law: {xfpt.extreme_law(s, 100).quantile(0.5):.5f}"
      f"  (= 2 + sqrt(ln 2 / 200) = {2 + math.sqrt(math.log(2) / 200):.5f})")
