"""Sampling the Poisson collection of subsets and its overlay.

A collection is drawn atom by atom: atom ``B`` appears ``Poisson(nu(B))``
times, independently.  This is the same law as drawing a
``Poisson(total mass)`` number of members i.i.d. proportional to the
masses.  Restriction to a predicate keeps the members it accepts, on the
same draw, so restricted overlays are coupled with the full one.
"""

from dataclasses import dataclass

import numpy as np

from . import subsets as sb
from .lattice import IntensityMeasure, SiteSet, avoidance_prob
from .stats import Estimate, InfeasibleConditioning, bernoulli_estimate

DEFAULT_FLOOR = 1e-4


@dataclass(frozen=True)
class SetCollection:
    siteset: SiteSet
    members: tuple            # ((mask, multiplicity), ...), masks ascending
    seed: int | None = None

    def __post_init__(self):
        for m, k in self.members:
            if m <= 0 or k < 1:
                raise ValueError("members must be nonempty with multiplicity >= 1")

    def __len__(self):
        return sum(k for _, k in self.members)


# ---------------------------------------------------------------- predicates


class GammaPredicate:
    """A class of subsets, evaluated on arrays of masks."""

    def accepts(self, masks):
        raise NotImplementedError

    def __call__(self, mask):
        return bool(self.accepts(np.array([mask]))[0])


class All(GammaPredicate):
    def accepts(self, masks):
        return np.ones(np.shape(masks), dtype=bool)

    def __repr__(self):
        return "All()"


@dataclass(frozen=True, repr=True)
class MaxSize(GammaPredicate):
    """Subsets with at most ``cap`` sites."""

    cap: int

    def __post_init__(self):
        if self.cap < 0:
            raise ValueError("cap must be >= 0")

    def accepts(self, masks):
        return sb.popcount(masks) <= self.cap


@dataclass(frozen=True, repr=True)
class FiniteIntersectionCap(GammaPredicate):
    """Subsets meeting ``block`` in at most ``cap`` sites.

    Finite-scale stand-in for "finite intersection with a block": on a
    finite site set every intersection is finite, so the class is
    truncated at ``cap``.
    """

    block: int
    cap: int

    def __post_init__(self):
        if self.cap < 0:
            raise ValueError("cap must be >= 0")

    def accepts(self, masks):
        return sb.popcount(np.asarray(masks) & self.block) <= self.cap


@dataclass(frozen=True, repr=True)
class Custom(GammaPredicate):
    subsets: frozenset

    def accepts(self, masks):
        return np.isin(np.asarray(masks), np.fromiter(self.subsets, dtype=np.int64))


@dataclass(frozen=True, repr=True)
class AvoidingSites(GammaPredicate):
    """Subsets disjoint from ``block``; restriction to these is conditioning on zeros."""

    block: int

    def accepts(self, masks):
        return (np.asarray(masks) & self.block) == 0


def parse_gamma(text, siteset):
    """Parse ``all``, ``maxsize:K``, ``cap:SITES:K`` or ``avoid:SITES``.

    ``SITES`` is a comma-separated list of site ids (integers if possible).
    """
    def sites(spec):
        ids = [int(s) if s.lstrip("-").isdigit() else s for s in spec.split(",") if s]
        return siteset.mask(ids)

    parts = text.split(":")
    kind = parts[0].lower()
    if kind == "all":
        return All()
    if kind == "maxsize" and len(parts) == 2:
        return MaxSize(int(parts[1]))
    if kind == "cap" and len(parts) == 3:
        return FiniteIntersectionCap(sites(parts[1]), int(parts[2]))
    if kind == "avoid" and len(parts) == 2:
        return AvoidingSites(sites(parts[1]))
    raise ValueError(f"cannot parse gamma predicate {text!r}")


# ---------------------------------------------------------------- sampling


def sample_collection(nu: IntensityMeasure, rng, seed=None) -> SetCollection:
    """One draw of the Poisson collection with intensity ``nu``."""
    if not nu.atoms:
        return SetCollection(nu.siteset, (), seed)
    masks = nu.masks
    counts = rng.poisson(nu.masses)
    order = np.argsort(masks)
    members = tuple((int(masks[i]), int(counts[i])) for i in order if counts[i] > 0)
    return SetCollection(nu.siteset, members, seed)


def overlay(coll: SetCollection) -> int:
    """Configuration mask: union of all members."""
    out = 0
    for m, _ in coll.members:
        out |= m
    return out


def restrict(coll: SetCollection, gamma: GammaPredicate) -> SetCollection:
    """Keep exactly the members accepted by ``gamma``."""
    if not coll.members:
        return coll
    masks = np.array([m for m, _ in coll.members], dtype=np.int64)
    ok = gamma.accepts(masks)
    return SetCollection(coll.siteset,
                         tuple(mk for mk, keep in zip(coll.members, ok) if keep), coll.seed)


def sample_presence(nu: IntensityMeasure, n_samples, rng):
    """Boolean matrix ``(n_samples, n_atoms)``: does the atom appear at least once."""
    return rng.random((n_samples, len(nu.atoms))) < -np.expm1(-nu.masses)


def overlays_from_presence(masks, presence):
    if presence.shape[1] == 0:
        return np.zeros(presence.shape[0], dtype=np.int64)
    return np.bitwise_or.reduce(np.where(presence, masks[None, :], 0), axis=1)


def sample_overlays(nu: IntensityMeasure, n_samples, rng, gamma=None):
    """``n_samples`` independent configuration masks of the overlay process."""
    presence = sample_presence(nu, n_samples, rng)
    masks = nu.masks
    if gamma is not None:
        presence &= gamma.accepts(masks)[None, :]
    return overlays_from_presence(masks, presence)


def avoidance_frequencies(configs, n_sites):
    """Empirical ``P(X(D) == 0)`` for every mask ``D``, with binomial stderr."""
    configs = np.asarray(configs, dtype=np.int64)
    counts = np.bincount(configs, minlength=1 << n_sites).astype(np.float64)
    contained = sb.zeta_transform(counts)          # #{X subset of A}
    freq = contained[sb.complement_index(n_sites)] / configs.size
    se = np.sqrt(freq * (1 - freq) / configs.size)
    return freq, se


# ---------------------------------------------------------------- diagnostics


def _monotone_direction(nu, gammas):
    n = nu.siteset.n
    probe = np.arange(1, 1 << n, dtype=np.int64) if n <= 16 else nu.masks
    acc = np.array([g.accepts(probe) for g in gammas])
    inc = np.all(acc[:-1] <= acc[1:])
    dec = np.all(acc[:-1] >= acc[1:])
    if not (inc or dec):
        raise ValueError("predicate sequence is not monotone under inclusion")
    return "increasing" if inc else "decreasing"


def truncation_convergence(nu: IntensityMeasure, gammas, delta, n_samples, rng, seed=None):
    """Avoidance of ``delta`` under each restricted overlay along a monotone sequence.

    All estimates use the same draws, so the sequence of frequencies is
    itself monotone; its end point approaches ``avoidance_prob`` of the
    limiting restricted measure.
    """
    gammas = list(gammas)
    if not gammas:
        return []
    _monotone_direction(nu, gammas)
    d = nu.siteset.as_mask(delta)
    presence = sample_presence(nu, n_samples, rng)
    masks = nu.masks
    out = []
    for g in gammas:
        x = overlays_from_presence(masks, presence & g.accepts(masks)[None, :])
        out.append(bernoulli_estimate(int(((x & d) == 0).sum()), n_samples, seed))
    return out


def conditional_vs_restriction_check(nu: IntensityMeasure, w, delta, n_samples, rng,
                                     floor=DEFAULT_FLOOR, seed=None):
    """Rejection estimate of ``P(X(delta) == 0 | X(w) == 0)`` and its exact value.

    The exact value is the avoidance probability under ``nu`` restricted to
    atoms disjoint from ``w``.
    """
    w = nu.siteset.as_mask(w)
    d = nu.siteset.as_mask(delta)
    x = sample_overlays(nu, n_samples, rng)
    accepted = x[(x & w) == 0]
    measured = accepted.size / n_samples
    if measured < floor or accepted.size == 0:
        raise InfeasibleConditioning(measured, floor, "X(w) == 0")
    est = bernoulli_estimate(int(((accepted & d) == 0).sum()), accepted.size, seed)
    exact = avoidance_prob(nu.restricted(lambda m: m & w == 0), d)
    return est, exact
