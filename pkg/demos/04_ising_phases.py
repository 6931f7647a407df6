"""
Ising phases: the Schonmann projection and phase mixtures
=========================================================

Below the critical temperature the 2-D Ising model has distinct plus and
minus phases.  Clamping the middle row to zeros on both sides of the
origin drags the origin into the minus phase, which a representable
process could not do from zeros alone.  A half-half mixture of the two
phases has ergodic averages that never concentrate.
"""

import numpy as np

from prlab import ising

beta = 0.6
print("critical beta:", ising.BETA_CRITICAL_2D)

# the plus boundary of the 97x97 box needs a long burn-in to lose its grip
for variant in (ising.TwoSided(2, 20), ising.OneSided(2, 20)):
    est = ising.schonmann_mixing_experiment(variant, beta, 48, sweeps=20_000, n_samples=2000,
                                            seed=1, n_chains=10, thin=40)
    print(f"{variant.label}: E[Z(0)] = {est.mean:.3f} +- {est.stderr:.3f}")

box = ising.IsingBox(2, 24, beta, "free")
curve = ising.variance_curve(ising.mixture_batch_sampler(0.5, box), 0.5, [4, 8, 16], 2000, seed=2)
plus = ising.variance_curve(ising.phase_batch_sampler(box.with_(boundary="plus")), 0.5,
                            [4, 8, 16], 2000, seed=3)
print("\n n   mixture Var   plus Var   P(avg >= 1/2)")
for m, p in zip(curve, plus):
    print(f"{m.n:3d}   {m.variance.mean:.4f}      {p.variance.mean:.2e}   {m.exceedance.mean:.2f}")

rng = np.random.default_rng(4)
values = [ising.mixture_sampler(0.5, beta, box, 300, rng).magnetization() for _ in range(200)]
low, high, z = ising.bimodality(values)
print(f"\ndensity modes: {low.mean:.3f} and {high.mean:.3f}, separated by {z:.0f} stderr")
