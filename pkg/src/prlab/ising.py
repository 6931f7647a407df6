"""Nearest-neighbour Ising model on boxes of Z^d in the {0,1} encoding.

A configuration ``x`` in ``{0,1}**box`` has spins ``s = 2x - 1``; the Gibbs
weight is ``exp(beta * sum_{<ij>} s_i s_j)`` summed over box bonds plus bonds
to the boundary (all +1 for Plus, all -1 for Minus, absent for Free).
Clamped sites are held fixed, which is exactly conditioning on their values.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import _ising_kernels as K
from .geometry import Grid
from .lattice import EXACT_MAX_SITES, BinaryLaw, SiteSet
from .seeding import replicate_rng
from .stats import Estimate, jackknife, mean_estimate

BETA_CRITICAL_2D = 0.5 * math.log(1 + math.sqrt(2))
DEFAULT_BETA = 0.6
DEFAULT_THIN = 10
MIN_SWEEPS = 10

BOUNDARIES = ("plus", "minus", "free")


@dataclass(frozen=True)
class IsingBox:
    """Box ``[-n, n]**d`` (or an explicit ``shape``) with boundary and clamps.

    ``clamps`` maps coordinate tuples to 0 or 1.  ``beta = 0`` is allowed
    and gives independent fair coins.
    """

    d: int
    n: int
    beta: float
    boundary: str = "plus"
    clamps: dict = field(default_factory=dict)
    shape: tuple | None = None

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if not self.beta >= 0 or not math.isfinite(self.beta):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")
        if self.shape is not None and len(self.shape) != self.d:
            raise ValueError("shape must have d entries")
        grid = self.grid
        clean = {}
        for site, v in self.clamps.items():
            site = tuple(int(c) for c in np.atleast_1d(site))
            if v not in (0, 1):
                raise ValueError(f"clamp value for {site} must be 0 or 1")
            grid.index(site)                     # raises IndexError outside the box
            clean[site] = int(v)
        object.__setattr__(self, "clamps", clean)

    @property
    def grid(self):
        return Grid(self.shape) if self.shape is not None else Grid.cube(self.d, self.n)

    @property
    def size(self):
        return self.grid.size

    def with_(self, **changes):
        fields = dict(d=self.d, n=self.n, beta=self.beta, boundary=self.boundary,
                      clamps=self.clamps, shape=self.shape)
        fields.update(changes)
        return IsingBox(**fields)

    def boundary_field(self):
        """Sum of boundary spins adjacent to each site."""
        missing = self.grid.missing_neighbors()
        sign = {"plus": 1, "minus": -1, "free": 0}[self.boundary]
        return (sign * missing).astype(np.int64)

    def clamp_arrays(self):
        grid = self.grid
        clamped = np.zeros(grid.size, dtype=np.bool_)
        values = np.zeros(grid.size, dtype=np.int8)
        for site, v in self.clamps.items():
            k = grid.index(site)
            clamped[k] = True
            values[k] = 2 * v - 1
        return clamped, values

    def to_dict(self):
        return {"d": self.d, "n": self.n, "beta": self.beta, "boundary": self.boundary,
                "clamps": [[list(s), v] for s, v in sorted(self.clamps.items())],
                "shape": list(self.shape) if self.shape is not None else None}


@dataclass
class SpinField:
    """One configuration in ``{0,1}`` shaped like the box grid."""

    values: np.ndarray
    box: IsingBox

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.uint8).reshape(self.box.grid.shape)
        grid = self.box.grid
        flat = self.values.reshape(-1)
        for site, v in self.box.clamps.items():
            if flat[grid.index(site)] != v:
                raise ValueError(f"clamped site {site} does not hold {v}")

    def magnetization(self):
        return float(self.values.mean())


def parse_clamp_spec(spec):
    """``"x,y=v;x,y=v"`` -> ``{(x, y): v}``; empty string gives no clamps."""
    out = {}
    for part in filter(None, (p.strip() for p in (spec or "").split(";"))):
        site, _, v = part.partition("=")
        out[tuple(int(c) for c in site.split(","))] = int(v)
    return out


# ---------------------------------------------------------------- sampling


def _initial_spins(box, init, rng):
    size = box.size
    if init is None:
        init = {"plus": "plus", "minus": "minus", "free": "random"}[box.boundary]
    if isinstance(init, str):
        if init == "plus":
            spins = np.ones(size, dtype=np.int8)
        elif init == "minus":
            spins = -np.ones(size, dtype=np.int8)
        elif init == "random":
            spins = (2 * rng.integers(0, 2, size) - 1).astype(np.int8)
        else:
            raise ValueError(f"unknown init {init!r}")
    else:
        spins = (2 * np.asarray(init, dtype=np.int8).reshape(-1) - 1).astype(np.int8)
    clamped, values = box.clamp_arrays()
    spins[clamped] = values[clamped]
    return spins


def _kernel_args(box):
    grid = box.grid
    clamped, _ = box.clamp_arrays()
    table = K.heat_bath_table(float(box.beta), 2 * grid.d)
    return grid.neighbors, box.boundary_field(), clamped, table, 2 * grid.d


def glauber_chain(box: IsingBox, n_samples, rng, burn_in=1000, thin=DEFAULT_THIN,
                  init=None, sites=None):
    """Heat-bath chain: ``n_samples`` states ``thin`` sweeps apart after ``burn_in``.

    Returns a ``uint8`` array ``(n_samples, size)``, or ``(n_samples, len(sites))``
    when ``sites`` (flat grid indices) is given.
    """
    if thin < 1 or burn_in < 0:
        raise ValueError("thin >= 1 and burn_in >= 0 required")
    spins = _initial_spins(box, init, rng)
    nbr, bfield, clamped, table, shift = _kernel_args(box)
    if sites is None:
        out = np.empty((n_samples, box.size), dtype=np.uint8)
        K.run_chain(rng, spins, nbr, bfield, clamped, table, shift, int(burn_in), int(thin), out)
    else:
        sites = np.asarray(sites, dtype=np.int64)
        out = np.empty((n_samples, sites.size), dtype=np.uint8)
        K.run_chain_sites(rng, spins, nbr, bfield, clamped, table, shift,
                          int(burn_in), int(thin), sites, out)
    return out


def glauber_sample(box: IsingBox, sweeps, rng, init=None) -> SpinField:
    """State after ``sweeps`` systematic heat-bath sweeps."""
    if sweeps < MIN_SWEEPS:
        raise ValueError(f"sweeps must be >= {MIN_SWEEPS}")
    out = glauber_chain(box, 1, rng, burn_in=int(sweeps) - 1, thin=1, init=init)
    return SpinField(out[0], box)


def coalescence_check(box: IsingBox, sweeps, seed):
    """Run all-plus and all-minus starts on one random stream for ``sweeps`` sweeps.

    Heat bath with shared uniforms is monotone, so equal final states mean
    every start has been forgotten by then.
    """
    top = glauber_chain(box, 1, np.random.default_rng(seed), sweeps - 1, 1, "plus")
    bottom = glauber_chain(box, 1, np.random.default_rng(seed), sweeps - 1, 1, "minus")
    return bool(np.array_equal(top, bottom))


def independent_chains(box, n_chains, per_chain, seed, burn_in=1000, thin=DEFAULT_THIN,
                       init=None, sites=None):
    """``n_chains`` chains with derived seeds; list of per-chain sample arrays."""
    return [glauber_chain(box, per_chain, replicate_rng(seed, c), burn_in, thin, init, sites)
            for c in range(n_chains)]


# ---------------------------------------------------------------- exact enumeration


def box_siteset(box: IsingBox) -> SiteSet:
    coords = box.grid.coords
    return SiteSet([tuple(int(v) for v in c) for c in coords], coords)


def log_weights(box: IsingBox):
    """Unnormalized ``beta * energy`` for every configuration mask (clamps ignored)."""
    grid = box.grid
    n = grid.size
    if n > EXACT_MAX_SITES:
        raise ValueError(f"exact enumeration limited to {EXACT_MAX_SITES} sites, box has {n}")
    configs = np.arange(1 << n, dtype=np.int64)
    spins = (2 * ((configs[:, None] >> np.arange(n)) & 1) - 1).astype(np.int8)
    edges = grid.directed_edges
    edges = edges[edges[:, 0] < edges[:, 1]]
    energy = np.zeros(1 << n, dtype=np.float64)
    for i, j in edges:
        energy += spins[:, i] * spins[:, j]
    energy += spins @ box.boundary_field().astype(np.float64)
    return box.beta * energy


def exact_small_law(box: IsingBox) -> BinaryLaw:
    """Exact Gibbs table over all box sites (bit ``k`` = grid site ``k``)."""
    logw = log_weights(box)
    configs = np.arange(logw.size, dtype=np.int64)
    ok = np.ones(logw.size, dtype=bool)
    grid = box.grid
    for site, v in box.clamps.items():
        ok &= ((configs >> grid.index(site)) & 1) == v
    logw = np.where(ok, logw, -np.inf)
    w = np.exp(logw - logw[ok].max())
    return BinaryLaw(box_siteset(box), w / w.sum())


def path_box(length, beta, boundary="free"):
    """A 1-D path of ``length`` sites."""
    return IsingBox(1, (length - 1) // 2, beta, boundary, shape=(length,))


# ---------------------------------------------------------------- Schonmann projection


def _centre_row(grid):
    if grid.d != 2:
        raise ValueError(f"projection needs d = 2, got d = {grid.d}")
    return int(grid.offset[1])


def schonmann_projection(field: SpinField):
    """Row ``Z(i) = X(i, 0)`` of a 2-D field."""
    return field.values[:, _centre_row(field.box.grid)].copy()


def row_sites(box: IsingBox):
    """Flat indices of the row ``y = 0``, ordered by ``x``."""
    grid = box.grid
    col = _centre_row(grid)
    return np.ravel_multi_index((np.arange(grid.shape[0]), np.full(grid.shape[0], col)),
                                grid.shape)


@dataclass(frozen=True)
class TwoSided:
    """Clamp ``Z`` to 0 on ``[-m, m]`` minus ``[-n, n]``."""

    n: int
    m: int

    def clamped_row(self):
        return [i for i in range(-self.m, self.m + 1) if abs(i) > self.n]

    @property
    def label(self):
        return f"two-sided(n={self.n},m={self.m})"


@dataclass(frozen=True)
class OneSided:
    """Clamp ``Z`` to 0 on the open interval ``(-m, -n)``."""

    n: int
    m: int

    def clamped_row(self):
        return list(range(-self.m + 1, -self.n))

    @property
    def label(self):
        return f"one-sided(n={self.n},m={self.m})"


def schonmann_box(variant, beta, box_n):
    row = variant.clamped_row()
    if row and max(abs(i) for i in row) > box_n:
        raise ValueError(f"clamped segment {variant.label} leaves box of half-width {box_n}")
    return IsingBox(2, box_n, beta, "plus", {(i, 0): 0 for i in row})


def schonmann_chains(variant, beta, box_n, sweeps, n_samples, seed, n_chains=20,
                     thin=DEFAULT_THIN, init="plus"):
    """Per-chain arrays of ``Z(0)`` under the clamped Plus measure."""
    box = schonmann_box(variant, beta, box_n)
    site = np.array([box.grid.index((0, 0))])
    per = max(1, math.ceil(n_samples / n_chains))
    return [c[:, 0] for c in independent_chains(box, n_chains, per, seed, sweeps, thin,
                                                init, site)]


def schonmann_mixing_experiment(variant, beta, box_n, sweeps, n_samples, seed, n_chains=20,
                                thin=DEFAULT_THIN, init="plus") -> Estimate:
    """``E[Z(0)]`` with chain means as the independent units."""
    chains = schonmann_chains(variant, beta, box_n, sweeps, n_samples, seed, n_chains,
                              thin, init)
    est = mean_estimate([c.mean() for c in chains], seed)
    return Estimate(est.mean, est.stderr, sum(c.size for c in chains), seed)


# ---------------------------------------------------------------- mixtures and ergodic averages


def mixture_sampler(alpha, beta, box: IsingBox, sweeps, rng) -> SpinField:
    """Plus boundary with probability ``alpha``, Minus otherwise, then heat bath."""
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    boundary = "plus" if rng.random() < alpha else "minus"
    return glauber_sample(box.with_(beta=beta, boundary=boundary), sweeps, rng)


def phase_batch_sampler(box: IsingBox, per_batch=20, burn_in=500, thin=DEFAULT_THIN):
    """Callable ``rng -> (per_batch, *shape)`` fields from one chain."""
    def sample(rng):
        return glauber_chain(box, per_batch, rng, burn_in, thin).reshape(
            (per_batch,) + box.grid.shape)
    return sample


def mixture_batch_sampler(alpha, box: IsingBox, per_batch=20, burn_in=500, thin=DEFAULT_THIN):
    """Like :func:`phase_batch_sampler` with the boundary drawn per batch."""
    plus = phase_batch_sampler(box.with_(boundary="plus"), per_batch, burn_in, thin)
    minus = phase_batch_sampler(box.with_(boundary="minus"), per_batch, burn_in, thin)

    def sample(rng):
        return plus(rng) if rng.random() < alpha else minus(rng)
    return sample


def product_sampler(p, d, radius, per_batch=20):
    """Independent Bernoulli(``p``) fields on ``[-radius, radius]**d``."""
    shape = (per_batch,) + (2 * radius + 1,) * d

    def sample(rng):
        return (rng.random(shape) < p).astype(np.uint8)
    return sample


@dataclass(frozen=True)
class ErgodicStats:
    n: int
    mean: Estimate
    variance: Estimate
    exceedance: Estimate
    n_samples: int

    def to_dict(self):
        return {"n": self.n, "mean": self.mean.to_dict(), "variance": self.variance.to_dict(),
                "exceedance": self.exceedance.to_dict(), "n_samples": self.n_samples}


def window_averages(fields, n):
    """``X-bar_n`` of each field in a ``(k, *shape)`` stack of centred cubes."""
    fields = np.asarray(fields)
    side = fields.shape[1]
    if any(s != side for s in fields.shape[1:]) or side % 2 == 0:
        raise ValueError("fields must be centred cubes of odd side")
    radius = side // 2
    if n > radius - 1:
        raise ValueError(f"window {n} too large for box of half-width {radius} (margin 1 needed)")
    sl = (slice(None),) + (slice(radius - n, radius + n + 1),) * (fields.ndim - 1)
    return fields[sl].reshape(fields.shape[0], -1).mean(axis=1)


def variance_curve(sampler, c, n_list, n_samples, seed):
    """Mean, variance and ``P(X-bar_n >= c)`` per window, jackknifed over batches.

    ``sampler(rng)`` returns a batch of fields; ``n_samples`` batches are
    drawn with derived seeds and treated as the independent units.
    """
    if n_samples < 2:
        raise ValueError("need at least two batches")
    per_n = {n: [] for n in n_list}
    for b in range(n_samples):
        fields = sampler(replicate_rng(seed, b))
        for n in n_list:
            per_n[n].append(window_averages(fields, n))
    out = []
    for n in n_list:
        groups = per_n[n]
        total = sum(g.size for g in groups)
        mean = jackknife(np.mean, groups, seed)
        var = jackknife(lambda v: v.var(ddof=1), groups, seed)
        exc = jackknife(lambda v: np.mean(v >= c), groups, seed)
        out.append(ErgodicStats(n, mean, var, exc, total))
    return out


def bimodality(values, split=0.5, seed=None):
    """Cluster means below and above ``split`` and their separation in stderr units."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values[values < split], values[values >= split]
    if lo.size < 2 or hi.size < 2:
        return None
    low, high = mean_estimate(lo, seed), mean_estimate(hi, seed)
    return low, high, high.z_to(low)
