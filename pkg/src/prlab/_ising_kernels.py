"""Numba heat-bath kernels.  Spins are int8 in {-1, +1}."""

import numba
import numpy as np


@numba.njit(cache=True)
def _sweep(rng, spins, nbr, bfield, clamped, p_up, shift):
    n = spins.shape[0]
    for i in range(n):
        if clamped[i]:
            continue
        h = bfield[i]
        for k in range(nbr.shape[1]):
            j = nbr[i, k]
            if j >= 0:
                h += spins[j]
        spins[i] = 1 if rng.random() < p_up[h + shift] else -1


@numba.njit(cache=True)
def run_chain(rng, spins, nbr, bfield, clamped, p_up, shift, burn_in, thin, out):
    """Burn in, then store ``out.shape[0]`` states ``thin`` sweeps apart (as 0/1)."""
    for _ in range(burn_in):
        _sweep(rng, spins, nbr, bfield, clamped, p_up, shift)
    for s in range(out.shape[0]):
        for _ in range(thin):
            _sweep(rng, spins, nbr, bfield, clamped, p_up, shift)
        for i in range(spins.shape[0]):
            out[s, i] = 1 if spins[i] > 0 else 0


@numba.njit(cache=True)
def run_chain_sites(rng, spins, nbr, bfield, clamped, p_up, shift, burn_in, thin, sites, out):
    """As :func:`run_chain` but only record ``sites``."""
    for _ in range(burn_in):
        _sweep(rng, spins, nbr, bfield, clamped, p_up, shift)
    for s in range(out.shape[0]):
        for _ in range(thin):
            _sweep(rng, spins, nbr, bfield, clamped, p_up, shift)
        for k in range(sites.shape[0]):
            out[s, k] = 1 if spins[sites[k]] > 0 else 0


def heat_bath_table(beta, max_field):
    """``P(spin = +1 | local field h)`` for ``h`` in ``[-max_field, max_field]``."""
    h = np.arange(-max_field, max_field + 1, dtype=np.float64)
    return 1.0 / (1.0 + np.exp(-2.0 * beta * h))
