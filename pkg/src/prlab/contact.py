"""Contact process on boxes of Z^d via the graphical construction.

A graphical record holds, for a finite box and horizon ``T``, rate-1
healing times per site and rate-``lam`` infection times per directed
nearest-neighbour edge.  The process is a single chronological sweep:
healing sets a site to 0, an infection ``x -> y`` sets ``y`` to 1 when
``x`` is occupied.

The upper invariant measure is approximated on a finite box by starting
from all ones with the outer layer of the box frozen at 1; the sample is
read off an inner observation window that keeps a margin of at least
``lam * burn_in`` sites from the frozen layer.  Finite-volume conditional
probabilities are estimated by rejection over all translates of the
pattern inside the window, with replicates (independent runs) as the
statistical unit.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import _cp_kernels as K
from .geometry import Grid, cube_offsets, translate_counts
from .seeding import derive_seed, replicate_rng
from .stats import (Estimate, InfeasibleConditioning, bernoulli_estimate, mean_estimate,
                    ratio_estimate)

DEFAULT_FLOOR = 1e-4
SUPERCRITICAL_LAMBDA = {1: 3.0, 2: 2.0}


# ---------------------------------------------------------------- records


@dataclass(frozen=True)
class SpaceTimePoint:
    site: tuple
    time: float


@dataclass
class GraphicalRecord:
    grid: Grid
    horizon: float
    lam: float
    heal_ptr: np.ndarray
    heal_times: np.ndarray
    edges: np.ndarray
    inf_ptr: np.ndarray
    inf_times: np.ndarray
    seed: int | None = None
    ev_time: np.ndarray = field(init=False, repr=False)
    ev_kind: np.ndarray = field(init=False, repr=False)
    ev_a: np.ndarray = field(init=False, repr=False)
    ev_b: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n_heal = np.diff(self.heal_ptr)
        n_inf = np.diff(self.inf_ptr)
        times = np.concatenate([self.heal_times, self.inf_times])
        kind = np.concatenate([np.full(self.heal_times.size, K.HEAL, np.int8),
                               np.full(self.inf_times.size, K.INFECT, np.int8)])
        a = np.concatenate([np.repeat(np.arange(self.grid.size), n_heal),
                            np.repeat(self.edges[:, 0], n_inf)])
        b = np.concatenate([np.full(self.heal_times.size, -1),
                            np.repeat(self.edges[:, 1], n_inf)])
        order = np.argsort(times, kind="stable")
        self.ev_time = times[order]
        self.ev_kind = kind[order]
        self.ev_a = a[order].astype(np.int64)
        self.ev_b = b[order].astype(np.int64)

    @property
    def n_events(self):
        return int(self.ev_time.size)

    def healing(self, site):
        k = self._site_index(site)
        return self.heal_times[self.heal_ptr[k]:self.heal_ptr[k + 1]]

    def infection(self, x, y):
        x, y = self._site_index(x), self._site_index(y)
        hit = np.flatnonzero((self.edges[:, 0] == x) & (self.edges[:, 1] == y))
        if hit.size == 0:
            raise KeyError(f"no edge {x} -> {y}")
        e = hit[0]
        return self.inf_times[self.inf_ptr[e]:self.inf_ptr[e + 1]]

    def _site_index(self, site):
        if isinstance(site, (int, np.integer)):
            return int(site)
        return self.grid.index(site)


def _poisson_streams(rng, n_streams, rate, horizon):
    counts = rng.poisson(rate * horizon, n_streams) if horizon > 0 else np.zeros(n_streams, int)
    times = rng.uniform(0.0, horizon, counts.sum()) if horizon > 0 else np.zeros(0)
    stream = np.repeat(np.arange(n_streams), counts)
    order = np.lexsort((times, stream))
    ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return ptr, times[order]


def build_record(grid: Grid, horizon: float, lam: float, rng, seed=None) -> GraphicalRecord:
    """Independent Poisson healing (rate 1) and infection (rate ``lam``) streams."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if lam <= 0:
        raise ValueError("lam must be > 0")
    edges = grid.directed_edges
    heal_ptr, heal_times = _poisson_streams(rng, grid.size, 1.0, horizon)
    inf_ptr, inf_times = _poisson_streams(rng, edges.shape[0], lam, horizon)
    return GraphicalRecord(grid, float(horizon), float(lam), heal_ptr, heal_times,
                           edges, inf_ptr, inf_times, seed)


def thin_record(record: GraphicalRecord, lam: float, rng) -> GraphicalRecord:
    """Keep each infection event with probability ``lam / record.lam``.

    The thinned record has the law of a rate-``lam`` record and is coupled
    to the original, so its trajectories are pointwise dominated.
    """
    if not 0 < lam <= record.lam:
        raise ValueError("thinning needs 0 < lam <= record.lam")
    keep = rng.random(record.inf_times.size) < lam / record.lam
    stream = np.repeat(np.arange(record.edges.shape[0]), np.diff(record.inf_ptr))
    counts = np.bincount(stream[keep], minlength=record.edges.shape[0])
    ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return GraphicalRecord(record.grid, record.horizon, lam, record.heal_ptr, record.heal_times,
                           record.edges, ptr, record.inf_times[keep], record.seed)


@dataclass
class Trajectory:
    times: np.ndarray
    configs: np.ndarray      # (len(times), grid.size), uint8
    grid: Grid


def evolve(record: GraphicalRecord, initial, times=None, frozen=None, start=0.0) -> Trajectory:
    """Run the record's dynamics from ``initial`` at time ``start``.

    ``times`` are snapshot times in ``[start, horizon]`` (default: start
    and horizon).  Sites in ``frozen`` ignore healing events.
    """
    n = record.grid.size
    state = np.asarray(initial, dtype=np.uint8).reshape(-1).copy()
    if state.size != n:
        raise ValueError(f"initial configuration must have {n} sites")
    if times is None:
        times = [start, record.horizon]
    times = np.asarray(times, dtype=np.float64)
    if np.any(np.diff(times) < 0) or (times.size and times[0] < start):
        raise ValueError("snapshot times must be increasing and >= start")
    frozen = np.zeros(n, dtype=np.bool_) if frozen is None else np.asarray(frozen, bool).ravel()
    out = np.empty((times.size, n), dtype=np.uint8)
    K.sweep_record(record.ev_time, record.ev_kind, record.ev_a, record.ev_b,
                   state, frozen, float(start), times, out)
    return Trajectory(times, out, record.grid)


def active_path(record: GraphicalRecord, frm: SpaceTimePoint, to: SpaceTimePoint) -> bool:
    """Is there an active path from ``frm`` to ``to``?"""
    if to.time < frm.time:
        raise ValueError("paths go forward in time")
    x = record._site_index(frm.site)
    y = record._site_index(to.site)
    reach = K.forward_cluster(record.ev_time, record.ev_kind, record.ev_a, record.ev_b,
                              record.grid.size, x, float(frm.time), float(to.time))
    return bool(reach[y])


# ---------------------------------------------------------------- stationary sampling


@dataclass(frozen=True)
class StationarySetup:
    """Finite-box approximation of the upper invariant measure.

    The box has radius ``window + margin + 1``; its outer layer is frozen at
    1 and samples are read on ``[-window, window]**d``.  ``margin`` defaults
    to ``ceil(lam * burn_in)`` and may not be smaller.
    """

    d: int
    lam: float
    window: int
    burn_in: float = 20.0
    spacing: float = 1.0
    margin: int | None = None

    def __post_init__(self):
        if self.lam <= 0 or self.burn_in < 0 or self.spacing <= 0:
            raise ValueError("lam, spacing > 0 and burn_in >= 0 required")
        need = math.ceil(self.lam * self.burn_in)
        if self.margin is not None and self.margin < need:
            raise ValueError(f"margin {self.margin} < lam * burn_in = {need}")

    @property
    def margin_sites(self):
        return self.margin if self.margin is not None else math.ceil(self.lam * self.burn_in)

    @property
    def box_radius(self):
        return self.window + self.margin_sites + 1

    @property
    def grid(self):
        return Grid.cube(self.d, self.box_radius)

    @property
    def window_grid(self):
        return Grid.cube(self.d, self.window)

    def _arrays(self):
        grid = self.grid
        norm = grid.sup_norm()
        free = np.flatnonzero(norm < self.box_radius)
        edges = grid.directed_edges
        edges = edges[norm[edges[:, 1]] < self.box_radius]
        obs = np.flatnonzero(norm <= self.window)
        return grid, free, edges, obs

    def run(self, rng, n_snapshots):
        """``n_snapshots`` window configurations from one run, ``spacing`` apart after burn-in."""
        grid, free, edges, obs = self._arrays()
        out = np.empty((n_snapshots, obs.size), dtype=np.uint8)
        K.stationary_run(rng, free, edges[:, 0].copy(), edges[:, 1].copy(), float(self.lam),
                         grid.size, float(self.burn_in), float(self.spacing), obs, out)
        return out.reshape((n_snapshots,) + self.window_grid.shape)


def sample_upper_invariant(d: int, radius: int, horizon: float, lam: float, rng):
    """One configuration on ``[-radius, radius]**d`` at time ``horizon``.

    Starts from all ones with the outer layer frozen at 1.
    """
    grid = Grid.cube(d, radius)
    norm = grid.sup_norm()
    free = np.flatnonzero(norm < radius)
    edges = grid.directed_edges
    edges = edges[norm[edges[:, 1]] < radius]
    out = np.empty((1, grid.size), dtype=np.uint8)
    K.stationary_run(rng, free, edges[:, 0].copy(), edges[:, 1].copy(), float(lam),
                     grid.size, float(horizon), 1.0, np.arange(grid.size), out)
    return out[0].reshape(grid.shape)


def stationary_batches(setup: StationarySetup, n_samples: int, seed: int,
                       snapshots_per_replicate: int = 200):
    """Independent replicate runs covering at least ``n_samples`` snapshots."""
    n_rep = max(2, math.ceil(n_samples / snapshots_per_replicate))
    per = math.ceil(n_samples / n_rep)
    return [setup.run(replicate_rng(seed, r), per) for r in range(n_rep)]


@dataclass
class BurnInCheck:
    short: Estimate          # window density, all-ones start at time T before read-out
    long: Estimate           # same records, all-ones start at 2T before read-out
    z: float
    dominated: bool          # long <= short pointwise on every record

    def accepted(self, k=3.0):
        return self.dominated and abs(self.z) <= k


def burn_in_check(setup: StationarySetup, n_records: int, seed: int) -> BurnInCheck:
    """Compare window densities after ``T`` and ``2T`` on shared records."""
    grid, free, _, obs = setup._arrays()
    frozen = np.ones(grid.size, dtype=bool)
    frozen[free] = False
    t = setup.burn_in
    short, long = [], []
    dominated = True
    for r in range(n_records):
        rec = build_record(grid, 2 * t, setup.lam, replicate_rng(seed, r))
        ones = np.ones(grid.size, dtype=np.uint8)
        a = evolve(rec, ones, [2 * t], frozen, start=t).configs[0, obs]
        b = evolve(rec, ones, [2 * t], frozen, start=0.0).configs[0, obs]
        dominated &= bool(np.all(b <= a))
        short.append(a.mean())
        long.append(b.mean())
    s, l = mean_estimate(short, seed), mean_estimate(long, seed)
    return BurnInCheck(s, l, l.z_to(s), dominated)


# ---------------------------------------------------------------- patterns


def _frame(*offset_sets, d):
    allo = [np.asarray(o, dtype=np.int64).reshape(-1, d) for o in offset_sets]
    allo = np.concatenate(allo) if allo else np.zeros((0, d), np.int64)
    return allo


def _pattern_hits(batch, zeros, ones, frame):
    return translate_counts(batch, zeros, ones, frame)


@dataclass
class ConditionalEstimate:
    estimate: Estimate | None        # None when infeasible
    conditioning: Estimate           # measured P(conditioning event) per translate
    feasible: bool
    label: str = ""

    def to_dict(self):
        return {"label": self.label, "feasible": self.feasible,
                "estimate": None if self.estimate is None else self.estimate.to_dict(),
                "conditioning_probability": self.conditioning.to_dict()}


def conditional_from_batches(batches, target_zeros, zero_region, floor=DEFAULT_FLOOR,
                             seed=None, label="", raise_infeasible=True):
    """``P(X == 0 on target | X == 0 on region)`` by rejection over translates."""
    d = batches[0].ndim - 1
    target_zeros = np.asarray(target_zeros, dtype=np.int64).reshape(-1, d)
    zero_region = np.asarray(zero_region, dtype=np.int64).reshape(-1, d)
    frame = _frame(target_zeros, zero_region, d=d)
    num, den, trials = [], [], []
    for b in batches:
        cond = _pattern_hits(b, zero_region, (), frame)
        both = cond & _pattern_hits(b, target_zeros, (), frame)
        num.append(both.sum())
        den.append(cond.sum())
        trials.append(cond.size)
    cprob = ratio_estimate(den, trials, seed)
    if cprob.mean < floor or sum(den) == 0:
        if raise_infeasible:
            raise InfeasibleConditioning(cprob.mean, floor, label)
        return ConditionalEstimate(None, cprob, False, label)
    return ConditionalEstimate(ratio_estimate(num, den, seed), cprob, True, label)


def pattern_probability(batches, zeros=(), ones=(), seed=None):
    """Unconditional probability of a cylinder pattern, averaged over translates."""
    d = batches[0].ndim - 1
    frame = _frame(zeros, ones, d=d)
    hits = [_pattern_hits(b, zeros, ones, frame) for b in batches]
    est = ratio_estimate([h.sum() for h in hits], [h.size for h in hits], seed)
    return Estimate(est.mean, est.stderr, sum(b.shape[0] for b in batches), seed)


def box_minus(d, outer, inner):
    """Offsets of ``[-outer, outer]**d`` minus ``[-inner, inner]**d`` (``inner < 0`` removes nothing)."""
    pts = cube_offsets(d, outer)
    if inner < 0:
        return pts
    return pts[np.abs(pts).max(axis=1) > inner]


def directional_region(d, n, m, closed=False):
    """``[-m, m]**(d-1) x (-m, -n)`` on the last axis; ``closed`` uses ``[-m, -n]``."""
    lo, hi = (-m, -n) if closed else (-m + 1, -n - 1)
    if hi < lo:
        return np.zeros((0, d), dtype=np.int64)
    axes = [np.arange(-m, m + 1)] * (d - 1) + [np.arange(lo, hi + 1)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)


# ---------------------------------------------------------------- experiments


def default_setup(d, lam, window, burn_in=None):
    if burn_in is None:
        burn_in = 20.0 if d == 1 else 8.0
    return StationarySetup(d, lam, window, burn_in=burn_in)


def generator_identity_residual(m, lam, d, n_samples, seed, setup=None, batches=None):
    """Both sides of the stationarity identity for the indicator of ``X == 0 on box(m)``.

    ``lhs = sum_x P(X(x) = 1, X == 0 on box(m) minus x)``;
    ``rhs = lam * sum over boundary edges (x, y), x in box(m), y outside, of
    P(X(y) = 1, X == 0 on box(m))``.  Both are estimated from the same
    stationary snapshots; replicate runs are the independent unit.
    """
    if batches is None:
        setup = setup or default_setup(d, lam, m + 4)
        batches = stationary_batches(setup, n_samples, seed)
    inner = cube_offsets(d, m)
    frame = cube_offsets(d, m + 1)
    boundary = []
    for x in inner:
        for axis in range(d):
            for step in (-1, 1):
                y = x.copy()
                y[axis] += step
                if np.abs(y).max() > m:
                    boundary.append(y)
    lhs_r, rhs_r = [], []
    for b in batches:
        lhs = 0.0
        for k, x in enumerate(inner):
            rest = np.delete(inner, k, axis=0)
            lhs += _pattern_hits(b, rest, [x], frame).mean()
        rhs = 0.0
        for y in boundary:
            rhs += _pattern_hits(b, inner, [y], frame).mean()
        lhs_r.append(lhs)
        rhs_r.append(lam * rhs)
    n_snap = sum(b.shape[0] for b in batches)
    l, r = mean_estimate(lhs_r, seed), mean_estimate(rhs_r, seed)
    return (Estimate(l.mean, l.stderr, n_snap, seed), Estimate(r.mean, r.stderr, n_snap, seed))


def conditional_zero_experiment(target, zero_region, lam, d, n_samples, seed,
                                floor=DEFAULT_FLOOR, setup=None, batches=None):
    """``P(X == 0 on target | X == 0 on zero_region)`` under the stationary law.

    Raises :class:`InfeasibleConditioning` with the measured conditioning
    probability when it falls below ``floor``.
    """
    target = np.asarray(target, dtype=np.int64).reshape(-1, d)
    zero_region = np.asarray(zero_region, dtype=np.int64).reshape(-1, d)
    if batches is None:
        reach = int(np.abs(np.concatenate([target, zero_region])).max(initial=0))
        setup = setup or default_setup(d, lam, reach + 8)
        batches = stationary_batches(setup, n_samples, seed)
    return conditional_from_batches(batches, target, zero_region, floor, seed)


def directional_mixing_experiment(x, n, m, lam, d, n_samples, seed, closed=False,
                                  floor=DEFAULT_FLOOR, setup=None, batches=None):
    """``P(X(x) = 0 | X == 0 on [-m, m]**(d-1) x (-m, -n))``."""
    region = directional_region(d, n, m, closed)
    return conditional_zero_experiment([x], region, lam, d, n_samples, seed, floor,
                                       setup, batches)


@dataclass
class TrendPoint:
    param: int
    result: ConditionalEstimate


def _trend(batches, rungs, floor, seed):
    out = []
    for param, target, region, label in rungs:
        out.append(TrendPoint(param, conditional_from_batches(
            batches, target, region, floor, seed, label, raise_infeasible=False)))
    return out


def zero_block_trend(batches, n, ms, floor=DEFAULT_FLOOR, seed=None):
    """``P(X == 0 on box(n) | X == 0 on box(m) minus box(n))`` for each ``m``."""
    d = batches[0].ndim - 1
    rungs = [(m, cube_offsets(d, n), box_minus(d, m, n), f"m={m}") for m in ms]
    return _trend(batches, rungs, floor, seed)


def isolated_zero_trend(batches, ns, floor=DEFAULT_FLOOR, seed=None):
    """``P(X(o) = 0 | X == 0 on box(n) minus o)`` for each ``n``."""
    d = batches[0].ndim - 1
    o = np.zeros((1, d), dtype=np.int64)
    rungs = [(n, o, box_minus(d, n, 0), f"n={n}") for n in ns]
    return _trend(batches, rungs, floor, seed)


def directional_trend(batches, ns, m, x=None, closed=False, floor=DEFAULT_FLOOR, seed=None):
    """``P(X(x) = 0 | zeros on the directional region)`` for each ``n`` at fixed ``m``."""
    d = batches[0].ndim - 1
    x = np.zeros((1, d), dtype=np.int64) if x is None else np.asarray(x).reshape(1, d)
    rungs = [(n, x, directional_region(d, n, m, closed), f"n={n}") for n in ns]
    return _trend(batches, rungs, floor, seed)


# ---------------------------------------------------------------- survival and duality


@dataclass(frozen=True)
class SurvivalOutcome:
    status: str              # "Died" or "Survived"
    reason: str              # "extinct", "time", "size" or "escape"
    time: float


_REASONS = {K.DIED: "extinct", K.TIME_CUTOFF: "time", K.SIZE_CUTOFF: "size", K.ESCAPED: "escape"}


def default_cutoffs(lam, d):
    """Time and size cutoffs for declaring survival.

    A supercritical cluster that reaches a few dozen sites dies with
    probability exponentially small in its size, and the occupied region
    grows linearly in time, so the escape radius scales with the size cutoff.
    """
    size = 60 if d == 1 else 120
    return {"t_max": 200.0, "size_max": size, "radius": 4 * size}


def _survival_runs(delta, lam, d, n_runs, rng, t_max, size_max, radius):
    delta = np.asarray(delta, dtype=np.int64).reshape(-1, d)
    if delta.shape[0] == 0:
        raise ValueError("initial set must be nonempty")
    if lam <= 0 or t_max <= 0 or size_max <= 0:
        raise ValueError("lam and cutoffs must be positive")
    radius = max(int(radius), int(np.abs(delta).max()) + 2)
    side = 2 * radius + 1
    init = delta + radius
    outcome = np.empty(n_runs, dtype=np.int64)
    times = np.empty(n_runs, dtype=np.float64)
    K.survival_batch(rng, init, d, side, float(lam), float(t_max), int(size_max), n_runs,
                     outcome, times)
    return outcome, times


def survival_extinction(delta, lam, d, rng, t_max=None, size_max=None, radius=None):
    """Run from the finite set ``delta`` until extinction or a cutoff."""
    cut = default_cutoffs(lam, d)
    outcome, times = _survival_runs(delta, lam, d, 1, rng, t_max or cut["t_max"],
                                    size_max or cut["size_max"], radius or cut["radius"])
    code = int(outcome[0])
    return SurvivalOutcome("Died" if code == K.DIED else "Survived", _REASONS[code],
                           float(times[0]))


def extinction_frequency(delta, lam, d, n_samples, seed, t_max=None, size_max=None,
                         radius=None, block=10_000):
    cut = default_cutoffs(lam, d)
    t_max, size_max, radius = t_max or cut["t_max"], size_max or cut["size_max"], radius or cut["radius"]
    died = 0
    done = 0
    b = 0
    while done < n_samples:
        k = min(block, n_samples - done)
        outcome, _ = _survival_runs(delta, lam, d, k, replicate_rng(seed, b), t_max, size_max,
                                    radius)
        died += int((outcome == K.DIED).sum())
        done += k
        b += 1
    return bernoulli_estimate(died, n_samples, seed)


def avoidance_via_duality(delta, lam, d, n_samples, seed, **cutoffs) -> Estimate:
    """``P(X == 0 on delta)`` under the upper invariant law, as an extinction frequency."""
    delta = np.asarray(delta, dtype=np.int64).reshape(-1, d)
    if delta.shape[0] == 0:
        return Estimate(1.0, 0.0, max(int(n_samples), 1), seed)
    return extinction_frequency(delta, lam, d, n_samples, seed, **cutoffs)


def avoidance_direct(delta, batches, seed=None) -> Estimate:
    """``P(X == 0 on delta)`` from stationary snapshots."""
    d = batches[0].ndim - 1
    delta = np.asarray(delta, dtype=np.int64).reshape(-1, d)
    if delta.shape[0] == 0:
        return Estimate(1.0, 0.0, sum(b.shape[0] for b in batches), seed)
    return pattern_probability(batches, zeros=delta, seed=seed)


__all__ = [
    "SpaceTimePoint", "GraphicalRecord", "Trajectory", "StationarySetup", "BurnInCheck",
    "ConditionalEstimate", "TrendPoint", "SurvivalOutcome",
    "build_record", "thin_record", "evolve", "active_path", "sample_upper_invariant",
    "stationary_batches", "burn_in_check", "conditional_from_batches", "pattern_probability",
    "generator_identity_residual", "conditional_zero_experiment",
    "directional_mixing_experiment", "zero_block_trend", "isolated_zero_trend",
    "directional_trend", "survival_extinction", "extinction_frequency",
    "avoidance_via_duality", "avoidance_direct", "box_minus", "directional_region",
    "derive_seed",
]
