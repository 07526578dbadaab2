"""
Searchers that can die
======================

Each searcher is removed at an exponential time with rate gamma.  Among those
that still find the target, the mean search time shrinks like 1/gamma when
gamma is large, with a prefactor set by the number of jumps d only.
"""
import math

import xfpt
from xfpt.builders import chain, shifted_chain

for d in (1, 2, 3):
    net, query = chain(d)
    summary = xfpt.geodesic_summary(net, query)
    print(f"\nunit {d}-chain: gamma * E[tau | tau < sigma]  (limit {math.gamma(d + 1) / math.gamma(d):g})")
    for gamma in (1.0, 10.0, 100.0, 1e3, 1e4):
        mq = xfpt.MortalQuery(gamma)
        exact = xfpt.conditional_moment_exact(net, query, mq)
        asym = xfpt.conditional_moment_asymptotic(summary, mq)
        print(f"  gamma={gamma:8g}   exact {gamma * exact:.5f}   asymptotic {gamma * asym:.5f}")

# Monte Carlo confirms the exact route; each walker draws its own lifetime.
net, query = chain(2)
est = xfpt.sample_conditional_mortal(net, query, 50.0, 1.0, xfpt.SimConfig(seed=3, N=10 ** 6))
print(f"\n2-chain, gamma=50: MC {est.mean:.5f} +/- {est.stderr:.5f}, "
      f"exact {xfpt.conditional_moment_exact(net, query, xfpt.MortalQuery(50.0)):.5f}, "
      f"{100 * (1 - est.censored_fraction):.3f}% of walkers succeeded")

# With a hard minimum travel time the conditional mean tends to t_min instead,
# and success becomes rare quickly: P(tau < sigma) < exp(-gamma t_min).
# The fast-inactivation formula is first order in 1/gamma, so at these moderate
# rates it only gives the trend.
net, query = shifted_chain(2, t0=1.0, c=2.0, r=1.0)
summary = xfpt.geodesic_summary(net, query)
for gamma in (1.0, 3.0):
    mc = xfpt.sample_conditional_mortal(net, query, gamma, 1.0, xfpt.SimConfig(seed=4, N=10 ** 6, replicates=4))
    asym = xfpt.conditional_moment_asymptotic(summary, xfpt.MortalQuery(gamma))
    print(f"shifted chain, gamma={gamma:4g}: MC {mc.mean:.4f} +/- {mc.stderr:.4f}, asymptotic {asym:.4f}")
