"""Numba kernels for the contact process.

Event kinds in merged records: 0 = healing at ``a``, 1 = infection ``a -> b``.
"""

import numba
import numpy as np

HEAL = 0
INFECT = 1

DIED = 0
TIME_CUTOFF = 1
SIZE_CUTOFF = 2
ESCAPED = 3


@numba.njit(cache=True)
def sweep_record(ev_time, ev_kind, ev_a, ev_b, state, frozen, t_start, snap_times, out):
    """Apply record events after ``t_start`` in order; snapshot ``state`` at ``snap_times``.

    The snapshot at time ``s`` includes every event with time ``<= s``.
    """
    k = 0
    n_snap = snap_times.shape[0]
    i = np.searchsorted(ev_time, t_start, side="right")
    n_ev = ev_time.shape[0]
    while k < n_snap:
        while i < n_ev and ev_time[i] <= snap_times[k]:
            if ev_kind[i] == HEAL:
                if not frozen[ev_a[i]]:
                    state[ev_a[i]] = 0
            elif state[ev_a[i]] == 1:
                state[ev_b[i]] = 1
            i += 1
        out[k, :] = state
        k += 1


@numba.njit(cache=True)
def forward_cluster(ev_time, ev_kind, ev_a, ev_b, n_sites, start_site, t0, t1):
    """Sites reachable at ``t1`` by active paths from ``(start_site, t0)``."""
    reach = np.zeros(n_sites, dtype=np.uint8)
    reach[start_site] = 1
    i = np.searchsorted(ev_time, t0, side="right")
    n_ev = ev_time.shape[0]
    while i < n_ev and ev_time[i] <= t1:
        if ev_kind[i] == HEAL:
            reach[ev_a[i]] = 0
        elif reach[ev_a[i]] == 1:
            reach[ev_b[i]] = 1
        i += 1
    return reach


@numba.njit(cache=True)
def stationary_run(rng, free_sites, src, dst, lam, n_sites, burn_in, spacing, obs, out):
    """Evolve from all-ones with non-free sites frozen at 1; record ``obs`` sites.

    Events are drawn on the fly: healing at each free site (rate 1) and
    infection along each listed directed edge (rate ``lam``), which is the
    same law as sweeping a prebuilt graphical record.
    """
    state = np.ones(n_sites, dtype=np.uint8)
    n_free = free_sites.shape[0]
    n_edges = src.shape[0]
    total = n_free + lam * n_edges
    n_snap = out.shape[0]
    t = 0.0
    k = 0
    next_snap = burn_in
    while k < n_snap:
        t += rng.standard_exponential() / total
        while k < n_snap and t > next_snap:
            for j in range(obs.shape[0]):
                out[k, j] = state[obs[j]]
            k += 1
            next_snap += spacing
        if k >= n_snap:
            break
        u = rng.random() * total
        if u < n_free:
            state[free_sites[min(int(u), n_free - 1)]] = 0
        else:
            e = min(int((u - n_free) / lam), n_edges - 1)
            if state[src[e]] == 1:
                state[dst[e]] = 1


@numba.njit(cache=True)
def survival_batch(rng, init, d, side, lam, t_max, size_max, n_runs, outcome, ext_time):
    """Run the process on ``Z^d`` from ``init`` (coords in ``[0, side)``) ``n_runs`` times.

    Stops at extinction, at ``t_max``, when the occupied set reaches
    ``size_max``, or when an infection would leave the array (escape).
    """
    total_cells = 1
    for _ in range(d):
        total_cells *= side
    grid = np.zeros(total_cells, dtype=np.int64) - 1    # -1 empty, else slot in occ
    cap = size_max + 2 * d + 2
    occ_cell = np.zeros(cap, dtype=np.int64)
    occ_coord = np.zeros((cap, d), dtype=np.int64)
    strides = np.ones(d, dtype=np.int64)
    for a in range(d - 2, -1, -1):
        strides[a] = strides[a + 1] * side
    per_site = 1.0 + 2.0 * d * lam
    p_heal = 1.0 / per_site
    coord = np.zeros(d, dtype=np.int64)
    for r in range(n_runs):
        n_occ = 0
        for j in range(init.shape[0]):
            cell = 0
            for a in range(d):
                cell += init[j, a] * strides[a]
            if grid[cell] < 0:
                grid[cell] = n_occ
                occ_cell[n_occ] = cell
                for a in range(d):
                    occ_coord[n_occ, a] = init[j, a]
                n_occ += 1
        t = 0.0
        code = DIED
        while n_occ > 0:
            t += rng.standard_exponential() / (n_occ * per_site)
            if t > t_max:
                code = TIME_CUTOFF
                break
            k = rng.integers(0, n_occ)
            if rng.random() < p_heal:
                last = n_occ - 1
                grid[occ_cell[k]] = -1
                if k != last:
                    occ_cell[k] = occ_cell[last]
                    for a in range(d):
                        occ_coord[k, a] = occ_coord[last, a]
                    grid[occ_cell[k]] = k
                n_occ -= 1
            else:
                direction = rng.integers(0, 2 * d)
                axis = direction // 2
                step = 1 if direction % 2 == 1 else -1
                for a in range(d):
                    coord[a] = occ_coord[k, a]
                coord[axis] += step
                if coord[axis] < 0 or coord[axis] >= side:
                    code = ESCAPED
                    break
                cell = occ_cell[k] + step * strides[axis]
                if grid[cell] < 0:
                    grid[cell] = n_occ
                    occ_cell[n_occ] = cell
                    for a in range(d):
                        occ_coord[n_occ, a] = coord[a]
                    n_occ += 1
                    if n_occ >= size_max:
                        code = SIZE_CUTOFF
                        break
        outcome[r] = code
        ext_time[r] = t if code == DIED else np.inf
        for j in range(n_occ):
            grid[occ_cell[j]] = -1
