import math

import numpy as np
import pytest

from prlab import lattice as lc
from prlab import set_process as sp
from prlab.stats import InfeasibleConditioning, mean_estimate

SS = lc.SiteSet.range(4)


def test_collection_basics(rng):
    triv = lc.IntensityMeasure.trivial(SS)
    for _ in range(5):
        assert sp.sample_collection(triv, rng).members == ()
    coll = sp.SetCollection(SS, ((0b0001, 1), (0b0110, 2)))
    assert sp.overlay(coll) == 0b0111 and len(coll) == 3
    assert sp.overlay(sp.SetCollection(SS, ())) == 0
    with pytest.raises(ValueError):
        sp.SetCollection(SS, ((0, 1),))


def test_collection_determinism():
    nu = lc.random_intensity(SS, np.random.default_rng(0))
    a = sp.sample_collection(nu, np.random.default_rng(9), seed=9)
    b = sp.sample_collection(nu, np.random.default_rng(9), seed=9)
    assert a == b


def test_poisson_member_count(rng):
    nu = lc.IntensityMeasure.from_sets(SS, {(0,): 1.7})
    counts = [len(sp.sample_collection(nu, rng)) for _ in range(20_000)]
    assert mean_estimate(counts).agrees(1.7, k=4)


def test_restrict():
    coll = sp.SetCollection(SS, ((0b0001, 1), (0b0110, 1), (0b1111, 1)))
    assert sp.restrict(coll, sp.All()) == coll
    assert sp.restrict(coll, sp.MaxSize(0)).members == ()
    assert [m for m, _ in sp.restrict(coll, sp.MaxSize(2)).members] == [0b0001, 0b0110]
    cap = sp.FiniteIntersectionCap(0b0011, 1)
    assert [m for m, _ in sp.restrict(coll, cap).members] == [0b0001, 0b0110]
    assert sp.restrict(coll, sp.AvoidingSites(0b1000)).members == ((0b0001, 1), (0b0110, 1))
    assert sp.restrict(coll, sp.Custom(frozenset({0b1111}))).members == ((0b1111, 1),)
    with pytest.raises(ValueError):
        sp.MaxSize(-1)


def test_parse_gamma():
    assert isinstance(sp.parse_gamma("all", SS), sp.All)
    assert sp.parse_gamma("maxsize:2", SS) == sp.MaxSize(2)
    assert sp.parse_gamma("cap:0,1:1", SS) == sp.FiniteIntersectionCap(0b0011, 1)
    assert sp.parse_gamma("avoid:3", SS) == sp.AvoidingSites(0b1000)
    with pytest.raises(ValueError):
        sp.parse_gamma("bogus", SS)


def test_restriction_is_monotone_per_sample(rng):
    nu = lc.random_intensity(lc.SiteSet.range(6), rng)
    for _ in range(300):
        coll = sp.sample_collection(nu, rng)
        small = sp.overlay(sp.restrict(coll, sp.MaxSize(2)))
        big = sp.overlay(sp.restrict(coll, sp.MaxSize(4)))
        assert small & ~big == 0 and big & ~sp.overlay(coll) == 0


def test_overlay_law_total_variation(rng):
    nu = lc.random_intensity(lc.SiteSet.range(6), np.random.default_rng(3))
    x = sp.sample_overlays(nu, 1_000_000, rng)
    emp = np.bincount(x, minlength=64) / x.size
    assert 0.5 * np.abs(emp - lc.law_from_intensity(nu).probs).sum() < 0.01


def test_collection_and_presence_samplers_agree(rng):
    nu = lc.random_intensity(SS, np.random.default_rng(4))
    a = np.array([sp.overlay(sp.sample_collection(nu, rng)) for _ in range(40_000)])
    b = sp.sample_overlays(nu, 40_000, rng)
    fa, sa = sp.avoidance_frequencies(a, 4)
    fb, sb_ = sp.avoidance_frequencies(b, 4)
    assert np.all(np.abs(fa - fb) <= 4 * np.hypot(sa, sb_) + 1e-12)


def test_avoidance_frequencies_vs_exact(rng):
    nu = lc.random_intensity(SS, np.random.default_rng(5))
    f, se = sp.avoidance_frequencies(sp.sample_overlays(nu, 200_000, rng), 4)
    exact = np.array([lc.avoidance_prob(nu, d) for d in range(16)])
    assert f[0] == 1.0
    assert np.all(np.abs(f - exact) <= 4 * se + 1e-12)


def test_truncation_convergence(rng):
    nu = lc.random_intensity(SS, np.random.default_rng(6))
    est = sp.truncation_convergence(nu, [sp.MaxSize(k) for k in range(5)], 0b0011, 100_000, rng)
    means = [e.mean for e in est]
    assert means == sorted(means, reverse=True)          # more atoms, fewer avoidances
    assert est[0].mean == 1.0
    assert est[-1].agrees(lc.avoidance_prob(nu, 0b0011), k=4)
    const = sp.truncation_convergence(nu, [sp.MaxSize(2)] * 3, 1, 1000, rng)
    assert len({e.mean for e in const}) == 1
    with pytest.raises(ValueError):
        sp.truncation_convergence(nu, [sp.MaxSize(1), sp.AvoidingSites(1), sp.MaxSize(3)], 1,
                                  10, rng)


def test_conditional_vs_restriction(rng):
    nu = lc.random_intensity(lc.SiteSet.range(8), np.random.default_rng(8), total=1.0)
    est, exact = sp.conditional_vs_restriction_check(nu, 0b11, 0b11100, 200_000, rng)
    assert est.agrees(exact, k=4)
    est, exact = sp.conditional_vs_restriction_check(nu, 0, 0b1, 50_000, rng)
    assert exact == pytest.approx(lc.avoidance_prob(nu, 0b1))
    singles = lc.IntensityMeasure(SS, {1: 0.3, 2: 0.4, 4: 0.1, 8: 0.2})
    est, exact = sp.conditional_vs_restriction_check(singles, 0b1000, 0b0001, 50_000, rng)
    assert exact == pytest.approx(math.exp(-0.3))


def test_conditional_infeasible(rng):
    nu = lc.IntensityMeasure.from_sets(SS, {(0,): 12.0})
    with pytest.raises(InfeasibleConditioning) as info:
        sp.conditional_vs_restriction_check(nu, 0b1, 0b10, 10_000, rng)
    assert info.value.measured < 1e-4
