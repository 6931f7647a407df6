"""Exact computations for binary laws on a finite site set.

Everything here works on the subset lattice of an ordered site list:
configurations and subsets are bitmasks (site ``k`` is bit ``k``), laws
are arrays of length ``2**n``.  The central identity is

    P(X(D) == 0 everywhere) = exp(-nu({B : B meets D}))

for the union-overlay process X of a Poisson collection of subsets with
intensity ``nu``.  Writing ``h(A) = P(X subset of A)`` it gives
``sum_{B subset A} nu(B) = log h(A) - log h(empty)``, so the intensity is
recovered from a law by a log followed by Moebius inversion.  The law is
Poisson representable exactly when that inversion is nonnegative and every
``h(A)`` is positive.
"""

from dataclasses import dataclass, field
import math
from typing import Any, Hashable, Iterable, Sequence

import numpy as np

from . import subsets as sb

EXACT_MAX_SITES = 20
DEFAULT_TOL = 1e-9
REPRODUCTION_TOL = 1e-8
EMPIRICAL_Z = 4.0


class ZeroProbabilityConditioning(ValueError):
    """The conditioning event has probability zero."""


# ---------------------------------------------------------------- types


def _jsonable(site):
    return list(site) if isinstance(site, tuple) else site


class SiteSet:
    """Ordered finite site list, optionally with integer lattice coordinates."""

    def __init__(self, sites: Sequence[Hashable], coords=None):
        sites = tuple(sites)
        if len(set(sites)) != len(sites):
            raise ValueError("site identifiers must be unique")
        if len(sites) > sb.MAX_BITS:
            raise ValueError(f"at most {sb.MAX_BITS} sites (bitmask addressing)")
        self.sites = sites
        self._index = {s: k for k, s in enumerate(sites)}
        if coords is not None:
            coords = np.asarray(coords, dtype=np.int64)
            if coords.ndim == 1:
                coords = coords[:, None]
            if coords.shape[0] != len(sites):
                raise ValueError("one coordinate vector per site required")
            if len({tuple(c) for c in coords}) != len(sites):
                raise ValueError("coordinates must be unique per site")
        self.coords = coords

    @classmethod
    def range(cls, n):
        return cls(list(range(n)))

    @classmethod
    def box(cls, d, n):
        """Sites of ``[-n, n]**d``, ids are coordinate tuples (row-major)."""
        axis = np.arange(-n, n + 1)
        grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), -1).reshape(-1, d)
        return cls([tuple(int(v) for v in c) for c in grid], grid)

    @property
    def n(self):
        return len(self.sites)

    @property
    def full(self):
        return (1 << self.n) - 1

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, SiteSet) or self.sites != other.sites:
            return False
        if self.coords is None or other.coords is None:
            return self.coords is None and other.coords is None
        return np.array_equal(self.coords, other.coords)

    def __repr__(self):
        return f"SiteSet({list(self.sites)!r})"

    def index(self, site):
        return self._index[site]

    def mask(self, sites: Iterable[Hashable]):
        m = 0
        for s in sites:
            m |= 1 << self._index[s]
        return m

    def sites_of(self, mask):
        return [self.sites[k] for k in sb.bits_of(int(mask))]

    def as_mask(self, delta):
        """Accept a mask int or an iterable of site ids."""
        if isinstance(delta, (int, np.integer)):
            m = int(delta)
            if m < 0 or m > self.full:
                raise ValueError(f"mask {m} is not a subset of the site set")
            return m
        return self.mask(delta)

    def sub(self, keep_mask):
        """Sub-site-set of the sites in ``keep_mask``, order preserved."""
        idx = sb.bits_of(keep_mask)
        coords = None if self.coords is None else self.coords[idx]
        return SiteSet([self.sites[k] for k in idx], coords)

    def window_mask(self, radius):
        """Mask of sites with sup-norm coordinate at most ``radius``."""
        if self.coords is None:
            raise ValueError("site set has no coordinates")
        inside = np.abs(self.coords).max(axis=1) <= radius
        return sb.mask_of(np.flatnonzero(inside))

    def to_dict(self):
        out = {"sites": [_jsonable(s) for s in self.sites]}
        if self.coords is not None:
            out["coords"] = self.coords.tolist()
        return out

    @classmethod
    def from_dict(cls, data):
        sites = [tuple(s) if isinstance(s, list) else s for s in data["sites"]]
        return cls(sites, data.get("coords"))


def compress_masks(masks, keep_mask):
    """Re-express masks (subsets of ``keep_mask``) in the bit positions of the kept sites."""
    masks = np.asarray(masks, dtype=np.int64)
    out = np.zeros_like(masks)
    for new, old in enumerate(sb.bits_of(keep_mask)):
        out |= ((masks >> old) & 1) << new
    return out


class IntensityMeasure:
    """Finite nonnegative measure on the nonempty subsets of a site set."""

    def __init__(self, siteset: SiteSet, atoms: dict[int, float]):
        clean = {}
        for m, w in atoms.items():
            m = int(m)
            w = float(w)
            if m == 0:
                raise ValueError("atoms must be nonempty subsets")
            if m < 0 or m > siteset.full:
                raise ValueError(f"atom {m} is not a subset of the site set")
            if not w >= 0 or not math.isfinite(w):
                raise ValueError(f"atom mass must be finite and >= 0, got {w}")
            if w > 0:
                clean[m] = clean.get(m, 0.0) + w
        self.siteset = siteset
        self.atoms = clean

    @classmethod
    def from_sets(cls, siteset, sets: dict):
        return cls(siteset, {siteset.mask(s): w for s, w in sets.items()})

    @classmethod
    def from_dense(cls, siteset, dense):
        dense = np.asarray(dense, dtype=np.float64)
        return cls(siteset, {int(m): float(dense[m]) for m in np.flatnonzero(dense) if m})

    @classmethod
    def trivial(cls, siteset):
        return cls(siteset, {})

    def __repr__(self):
        return f"IntensityMeasure({len(self.atoms)} atoms on {self.siteset.n} sites)"

    @property
    def masks(self):
        return np.fromiter(self.atoms.keys(), dtype=np.int64, count=len(self.atoms))

    @property
    def masses(self):
        return np.fromiter(self.atoms.values(), dtype=np.float64, count=len(self.atoms))

    @property
    def total_mass(self):
        return float(sum(self.atoms.values()))

    def dense(self):
        if self.siteset.n > EXACT_MAX_SITES:
            raise ValueError(f"dense form limited to {EXACT_MAX_SITES} sites")
        out = np.zeros(1 << self.siteset.n)
        for m, w in self.atoms.items():
            out[m] += w
        return out

    def scaled(self, c):
        return IntensityMeasure(self.siteset, {m: c * w for m, w in self.atoms.items()})

    def restricted(self, keep):
        """``nu`` restricted to atoms for which ``keep(mask)`` is true (same site set)."""
        return IntensityMeasure(self.siteset, {m: w for m, w in self.atoms.items() if keep(m)})

    def on_sites(self, keep_mask):
        """Atoms contained in ``keep_mask``, re-indexed onto that sub-site-set."""
        keep_mask = self.siteset.as_mask(keep_mask)
        inside = {m: w for m, w in self.atoms.items() if m & ~keep_mask == 0}
        new = compress_masks(list(inside), keep_mask) if inside else []
        return IntensityMeasure(self.siteset.sub(keep_mask),
                                dict(zip((int(x) for x in new), inside.values())))

    def to_dict(self):
        out = self.siteset.to_dict()
        out["atoms"] = [
            {"set": [_jsonable(s) for s in self.siteset.sites_of(m)], "mass": w}
            for m, w in sorted(self.atoms.items())
        ]
        return out

    @classmethod
    def from_dict(cls, data):
        siteset = SiteSet.from_dict(data)
        atoms = {}
        for a in data["atoms"]:
            ids = [tuple(s) if isinstance(s, list) else s for s in a["set"]]
            m = siteset.mask(ids)
            atoms[m] = atoms.get(m, 0.0) + float(a["mass"])
        return cls(siteset, atoms)


class BinaryLaw:
    """Probability table over ``{0,1}**S`` indexed by configuration bitmask.

    ``source`` is ``"exact"`` or ``"empirical"``; empirical laws carry the
    sample count so that per-entry standard errors can be derived.
    """

    def __init__(self, siteset: SiteSet, probs, source="exact", n_samples=None):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != (1 << siteset.n,):
            raise ValueError(f"expected {1 << siteset.n} probabilities, got {probs.shape}")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"law not normalized (sum = {probs.sum()!r})")
        if source not in ("exact", "empirical"):
            raise ValueError("source must be 'exact' or 'empirical'")
        if source == "empirical" and not n_samples:
            raise ValueError("empirical laws need n_samples")
        self.siteset = siteset
        self.probs = probs
        self.source = source
        self.n_samples = n_samples

    @classmethod
    def empirical(cls, siteset, configs):
        """Frequency table of sampled configuration masks."""
        configs = np.asarray(configs, dtype=np.int64)
        counts = np.bincount(configs, minlength=1 << siteset.n).astype(np.float64)
        return cls(siteset, counts / counts.sum(), "empirical", int(configs.size))

    @classmethod
    def product(cls, siteset, p):
        """Independent sites with ``P(X(k) = 1) = p[k]``."""
        p = np.broadcast_to(np.asarray(p, dtype=np.float64), (siteset.n,))
        probs = np.ones(1)
        for pk in p:
            probs = np.concatenate([probs * (1 - pk), probs * pk])
        return cls(siteset, probs)

    def __repr__(self):
        return f"BinaryLaw({self.source}, {self.siteset.n} sites)"

    def stderr(self):
        if self.source != "empirical":
            return np.zeros_like(self.probs)
        return np.sqrt(self.probs * (1 - self.probs) / self.n_samples)

    def containment(self):
        """``h[A] = P(X subset of A) = P(X == 0 off A)``."""
        return sb.zeta_transform(self.probs)

    def avoidance(self, delta):
        m = self.siteset.as_mask(delta)
        return float(self.probs[(np.arange(self.probs.size) & m) == 0].sum())

    def marginal(self, keep_mask):
        keep_mask = self.siteset.as_mask(keep_mask)
        idx = compress_masks(np.arange(self.probs.size) & keep_mask, keep_mask)
        probs = np.bincount(idx, weights=self.probs, minlength=1 << sb.popcount(keep_mask).item())
        return BinaryLaw(self.siteset.sub(keep_mask), probs / probs.sum(),
                         self.source, self.n_samples)

    def mean(self):
        """``E[X(k)]`` for every site."""
        configs = np.arange(self.probs.size)
        return np.array([self.probs[(configs >> k) & 1 == 1].sum() for k in range(self.siteset.n)])

    def to_dict(self):
        out = self.siteset.to_dict()
        out["probs"] = self.probs.tolist()
        out["source"] = self.source
        if self.n_samples:
            out["n_samples"] = self.n_samples
        return out

    @classmethod
    def from_dict(cls, data):
        probs = np.asarray(data["probs"], dtype=np.float64)
        return cls(SiteSet.from_dict(data), probs, data.get("source", "exact"),
                   data.get("n_samples"))


@dataclass
class DecisionResult:
    verdict: str
    recovered: IntensityMeasure | None = None
    witness: dict | None = None
    tol: float = DEFAULT_TOL
    source: str = "exact"
    reproduction_error: float | None = None
    raw_atoms: np.ndarray | None = field(default=None, repr=False)

    @property
    def representable(self):
        return self.verdict == "Representable"

    def to_dict(self):
        out: dict[str, Any] = {"verdict": self.verdict, "tol": self.tol, "source": self.source}
        if self.recovered is not None:
            out["recovered"] = self.recovered.to_dict()
            out["reproduction_error"] = self.reproduction_error
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass(frozen=True)
class PartitionSpec:
    """Finite partition of a site set into disjoint blocks (masks)."""

    siteset: SiteSet
    blocks: tuple

    def __post_init__(self):
        union = 0
        for b in self.blocks:
            if b & union:
                raise ValueError("partition blocks must be disjoint")
            union |= b
        if union != self.siteset.full:
            raise ValueError("partition blocks must cover the site set")

    @classmethod
    def of(cls, siteset, blocks):
        return cls(siteset, tuple(siteset.as_mask(b) for b in blocks))


# ---------------------------------------------------------------- functionals


def avoidance_mass(nu: IntensityMeasure, delta) -> float:
    """Mass of the atoms that intersect ``delta``."""
    m = nu.siteset.as_mask(delta)
    if not nu.atoms or m == 0:
        return 0.0
    hit = (nu.masks & m) != 0
    return float(nu.masses[hit].sum())


def avoidance_prob(nu: IntensityMeasure, delta) -> float:
    """``P(X(delta) == 0)`` for the overlay process of ``nu``."""
    return math.exp(-avoidance_mass(nu, delta))


def joint_hit_mass(nu: IntensityMeasure, delta) -> float:
    """Mass of the atoms containing every site of ``delta``."""
    m = nu.siteset.as_mask(delta)
    if m == 0:
        raise ValueError("delta must be nonempty")
    if not nu.atoms:
        return 0.0
    inside = (nu.masks & m) == m
    return float(nu.masses[inside].sum())


def law_from_intensity(nu: IntensityMeasure) -> BinaryLaw:
    """Exact law of the overlay process, by inclusion-exclusion on the lattice."""
    n = nu.siteset.n
    if n > EXACT_MAX_SITES:
        raise ValueError(f"exact law limited to {EXACT_MAX_SITES} sites")
    inner = sb.zeta_transform(nu.dense())          # nu of atoms inside A
    h = np.exp(inner - nu.total_mass)               # P(X subset of A)
    probs = sb.moebius_transform(h)
    probs[probs < 0] = 0.0                          # cancellation noise only
    probs /= probs.sum()
    return BinaryLaw(nu.siteset, probs)


def _empirical_atom_slack(law, h):
    # delta-method variance of log h(A), summed over the inversion support
    var_log = np.where(h > 0, (1 - h) / (law.n_samples * np.maximum(h, 1e-300)), np.inf)
    return EMPIRICAL_Z * np.sqrt(sb.zeta_transform(var_log))


def decide_representable(law: BinaryLaw, tol: float = DEFAULT_TOL) -> DecisionResult:
    """Decide whether ``law`` is the law of an overlay process.

    Recovers the candidate intensity via ``log`` and Moebius inversion of
    the containment function.  Negative atoms beyond ``tol`` or a zero
    avoidance probability give ``NotRepresentable`` with a witness.  For
    empirical laws ``tol`` is widened per atom by the propagated sampling
    error.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if abs(law.probs.sum() - 1.0) > 1e-12:
        raise ValueError("law not normalized")
    siteset = law.siteset
    h = law.containment()
    if h[0] <= 0:
        # largest A with h(A) = 0 gives the smallest avoidance set A^c
        zero = np.flatnonzero(h <= 0)
        a = int(zero[np.argmax(sb.popcount(zero))])
        delta = siteset.full ^ a
        return DecisionResult(
            "NotRepresentable",
            witness={"kind": "zero_avoidance", "set": siteset.sites_of(delta), "mask": delta,
                     "reason": "infinite required mass"},
            tol=tol, source=law.source)

    g = np.log(h) - math.log(h[0])
    atoms = sb.moebius_transform(g)
    atoms[0] = 0.0
    slack = np.full(atoms.shape, float(tol))
    if law.source == "empirical":
        slack = slack + _empirical_atom_slack(law, h)
    excess = np.where(atoms < -slack, atoms, 0.0)
    if np.any(excess < 0):
        worst = int(np.argmin(atoms + slack))
        return DecisionResult(
            "NotRepresentable",
            witness={"kind": "negative_mass", "set": siteset.sites_of(worst), "mask": worst,
                     "mass": float(atoms[worst]), "tolerance": float(slack[worst])},
            tol=tol, source=law.source, raw_atoms=atoms)

    clamped = np.where(atoms < 0, 0.0, atoms)
    recovered = IntensityMeasure.from_dense(siteset, clamped)
    rebuilt = law_from_intensity(recovered).probs
    err = float(np.abs(rebuilt - law.probs).max())
    allowed = REPRODUCTION_TOL
    if law.source == "empirical":
        allowed = REPRODUCTION_TOL + EMPIRICAL_Z * float(law.stderr().max())
    if err > allowed:
        return DecisionResult(
            "NotRepresentable",
            witness={"kind": "reproduction_failed", "error": err, "allowed": allowed},
            tol=tol, source=law.source, raw_atoms=atoms)
    return DecisionResult("Representable", recovered=recovered, tol=tol, source=law.source,
                          reproduction_error=err, raw_atoms=atoms)


def restrict_law_to_zeros(law: BinaryLaw, w) -> BinaryLaw:
    """Conditional law of ``X`` off ``w`` given ``X(w) == 0``."""
    siteset = law.siteset
    w = siteset.as_mask(w)
    configs = np.arange(law.probs.size)
    ok = (configs & w) == 0
    mass = law.probs[ok].sum()
    if mass <= 0:
        raise ZeroProbabilityConditioning(f"P(X == 0 on {siteset.sites_of(w)}) = 0")
    keep = siteset.full ^ w
    probs = np.zeros(1 << (siteset.n - sb.popcount(w).item()))
    probs[compress_masks(configs[ok], keep)] = law.probs[ok] / mass
    return BinaryLaw(siteset.sub(keep), probs, law.source, law.n_samples)


def _pair_covariances(law: BinaryLaw):
    configs = np.arange(law.probs.size)
    bits = ((configs[:, None] >> np.arange(law.siteset.n)) & 1).astype(np.float64)
    mean = bits.T @ law.probs
    second = (bits * law.probs[:, None]).T @ bits
    return second - np.outer(mean, mean)


def dfkg_pair_check(law: BinaryLaw, i, j, cond=()) -> float:
    """``Cov(X(i), X(j) | X(cond) == 0)``; nonnegative for representable laws."""
    siteset = law.siteset
    cond = siteset.as_mask(cond)
    ki, kj = siteset.index(i), siteset.index(j)
    if (cond >> ki) & 1 or (cond >> kj) & 1:
        raise ValueError("i and j must lie outside the conditioning set")
    sub = restrict_law_to_zeros(law, cond)
    cov = _pair_covariances(sub)
    return float(cov[sub.siteset.index(i), sub.siteset.index(j)])


def dfkg_min_covariance(law: BinaryLaw):
    """Smallest conditional pair covariance over all conditioning sets.

    Returns ``(value, (i, j, cond_mask))``.  Conditioning sets with zero
    probability are skipped.
    """
    n = law.siteset.n
    best = (math.inf, None)
    for cond in range(1 << n):
        if n - sb.popcount(cond).item() < 2:
            continue
        try:
            sub = restrict_law_to_zeros(law, cond)
        except ZeroProbabilityConditioning:
            continue
        cov = _pair_covariances(sub)
        iu = np.triu_indices(sub.siteset.n, 1)
        k = int(np.argmin(cov[iu]))
        if cov[iu][k] < best[0]:
            pair = (sub.siteset.sites[iu[0][k]], sub.siteset.sites[iu[1][k]])
            best = (float(cov[iu][k]), (*pair, cond))
    return best


def conditional_mixing_profile(law: BinaryLaw, partition: PartitionSpec, inner_masks):
    """Total-variation gap between conditioned and unconditioned inner marginals.

    For each block ``Q`` and inner set ``S_n`` this is
    ``TV( law(X on S_n | X(Q minus S_n) == 0), law(X on S_n) )``; it is
    ``nan`` when the conditioning event has probability zero.  For an
    overlay process with only finite atoms the gap tends to zero as the
    inner sets exhaust the site set.
    """
    out = np.full((len(partition.blocks), len(inner_masks)), np.nan)
    for a, q in enumerate(partition.blocks):
        for b, inner in enumerate(inner_masks):
            inner = law.siteset.as_mask(inner)
            base = law.marginal(inner).probs
            try:
                cond = restrict_law_to_zeros(law, q & ~inner)
            except ZeroProbabilityConditioning:
                continue
            keep = law.siteset.full ^ (q & ~inner)
            inner_in_keep = int(compress_masks([inner], keep)[0])
            out[a, b] = 0.5 * np.abs(cond.marginal(inner_in_keep).probs - base).sum()
    return out


def _window_indices(nu, n):
    coords = nu.siteset.coords
    if coords is None:
        raise ValueError("intensity measure has no site coordinates")
    return np.flatnonzero(np.abs(coords).max(axis=1) <= n)


def density_class_mass(nu: IntensityMeasure, n: int, delta: float) -> float:
    """Mass of the atoms filling at least a ``delta`` fraction of the box of radius ``n``."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    box = _window_indices(nu, n)
    if not nu.atoms:
        return 0.0
    box_mask = sb.mask_of(box)
    hits = sb.popcount(nu.masks & box_mask)
    return float(nu.masses[hits >= delta * box.size].sum())


@dataclass(frozen=True)
class PairExponentialAverage:
    with_diagonal: float    # |L|^-2 * sum over all (i, j)
    off_diagonal: float     # mean over i != j
    diagonal: float         # mean over i == j
    box_size: int


def pair_exponential_average(nu: IntensityMeasure, n: int) -> PairExponentialAverage:
    """Average of ``exp(nu(atoms containing i and j))`` over pairs in the box."""
    box = _window_indices(nu, n)
    size = box.size
    if nu.atoms:
        incidence = ((nu.masks[:, None] >> box[None, :]) & 1).astype(np.float64)
        joint = incidence.T @ (incidence * nu.masses[:, None])
    else:
        joint = np.zeros((size, size))
    e = np.exp(joint)
    diag = float(np.trace(e))
    total = float(e.sum())
    off = (total - diag) / (size * (size - 1)) if size > 1 else math.nan
    return PairExponentialAverage(total / size ** 2, off, diag / size, size)


# ---------------------------------------------------------------- helpers


def random_intensity(siteset: SiteSet, rng, n_atoms=None, total=2.0) -> IntensityMeasure:
    """Random sparse intensity with roughly ``total`` mass."""
    n = siteset.n
    if n_atoms is None:
        n_atoms = int(rng.integers(1, 2 * n + 2))
    masks = rng.integers(1, 1 << n, size=n_atoms)
    w = rng.exponential(size=n_atoms)
    w *= total / w.sum()
    atoms = {}
    for m, x in zip(masks.tolist(), w.tolist()):
        atoms[m] = atoms.get(m, 0.0) + x
    return IntensityMeasure(siteset, atoms)
