"""
Sampling Poisson collections of sets
====================================

Each atom A of an intensity measure appears in the collection a Poisson
number of times with mean nu(A); only presence matters for the union, so
the overlay is built from independent Bernoulli(1 - exp(-nu(A))) flags.
"""

import numpy as np

from prlab import lattice as lc
from prlab import set_process as sp

rng = np.random.default_rng(0)
S = lc.SiteSet.range(6)
nu = lc.random_intensity(S, rng)
print(nu)

coll = sp.sample_collection(nu, rng)
print("one draw:", len(coll), "sets, overlay", S.sites_of(sp.overlay(coll)))

# avoidance frequencies against exp(-nu(sets hitting delta))
configs = sp.sample_overlays(nu, 200_000, rng)
freq, se = sp.avoidance_frequencies(configs, S.n)
for delta in ([0], [0, 1], [2, 3, 4]):
    m = S.mask(delta)
    print(f"P(X==0 on {delta}): {freq[m]:.4f} +- {se[m]:.4f}, exact {lc.avoidance_prob(nu, m):.4f}")

# truncating to small sets: avoidance decreases towards the full measure
gammas = [sp.MaxSize(k) for k in range(1, S.n + 1)]
for k, e in enumerate(sp.truncation_convergence(nu, gammas, [0, 1, 2], 100_000, rng), 1):
    print(f"sets of size <= {k}: {e.mean:.4f} +- {e.stderr:.4f}")
print("limit:", lc.avoidance_prob(nu, S.mask([0, 1, 2])))

# rejection-sampled conditional vs the restricted measure
est, exact = sp.conditional_vs_restriction_check(nu, [5], [0, 1], 200_000, rng)
print(f"\nP(X(0,1)==0 | X(5)==0): {est.mean:.4f} +- {est.stderr:.4f}, exact {exact:.4f}")
