import numpy as np
import pytest

from prlab import contact as cp
from prlab.geometry import Grid
from prlab.stats import InfeasibleConditioning
from _oracles import brute_active_path


def _random_record(rng):
    shape = [(1,), (2,), (3,), (4,), (5,), (2, 2)][int(rng.integers(0, 6))]
    return cp.build_record(Grid(shape), float(rng.uniform(0, 2)), float(rng.uniform(0.2, 4)), rng)


def test_evolve_matches_brute_force(rng):
    for _ in range(150):
        rec = _random_record(rng)
        n = rec.grid.size
        init = rng.integers(0, 2, n).astype(np.uint8)
        t = rec.horizon
        got = cp.evolve(rec, init, [t]).configs[0]
        want = [any(init[x] and brute_active_path(rec, x, 0.0, y, t) for x in range(n))
                for y in range(n)]
        assert got.tolist() == [int(w) for w in want]


def test_active_path_matches_brute_force(rng):
    for _ in range(100):
        rec = _random_record(rng)
        n = rec.grid.size
        x, y = int(rng.integers(0, n)), int(rng.integers(0, n))
        s = float(rng.uniform(0, rec.horizon))
        t = float(rng.uniform(s, rec.horizon))
        got = cp.active_path(rec, cp.SpaceTimePoint(x, s), cp.SpaceTimePoint(y, t))
        assert got == brute_active_path(rec, x, s, y, t)


def test_record_examples(rng):
    rec = cp.build_record(Grid((3,)), 0.0, 1.0, rng)
    assert rec.n_events == 0
    init = np.array([1, 0, 1], dtype=np.uint8)
    assert cp.evolve(rec, init, [0.0]).configs[0].tolist() == [1, 0, 1]
    rec = cp.build_record(Grid((3,)), 5.0, 1.0, rng)
    assert cp.evolve(rec, np.zeros(3, np.uint8)).configs[-1].sum() == 0
    assert rec.healing(1).size == rec.heal_ptr[2] - rec.heal_ptr[1]
    assert np.all(np.diff(rec.infection(0, 1)) >= 0)
    with pytest.raises(ValueError):
        cp.build_record(Grid((3,)), -1.0, 1.0, rng)
    with pytest.raises(ValueError):
        cp.active_path(rec, cp.SpaceTimePoint(0, 2.0), cp.SpaceTimePoint(0, 1.0))


def test_attractiveness_and_thinning(rng):
    for _ in range(30):
        rec = cp.build_record(Grid((4, 4)), 3.0, 2.0, rng)
        a = rng.integers(0, 2, 16).astype(np.uint8)
        b = a | rng.integers(0, 2, 16).astype(np.uint8)
        times = np.linspace(0, 3, 7)
        ta, tb = cp.evolve(rec, a, times).configs, cp.evolve(rec, b, times).configs
        assert np.all(ta <= tb)
        thin = cp.thin_record(rec, 1.0, rng)
        assert np.all(cp.evolve(thin, b, times).configs <= tb)
    with pytest.raises(ValueError):
        cp.thin_record(rec, 5.0, rng)


def test_frozen_sites_stay_occupied(rng):
    rec = cp.build_record(Grid((5,)), 10.0, 0.5, rng)
    frozen = np.array([1, 0, 0, 0, 1], bool)
    traj = cp.evolve(rec, np.ones(5, np.uint8), np.linspace(0, 10, 11), frozen)
    assert np.all(traj.configs[:, [0, 4]] == 1)


def test_stationary_setup_margin():
    with pytest.raises(ValueError):
        cp.StationarySetup(1, 3.0, 10, burn_in=20.0, margin=10)
    s = cp.StationarySetup(1, 3.0, 10, burn_in=20.0)
    assert s.margin_sites == 60 and s.box_radius == 71


def test_stationary_batches_deterministic():
    s = cp.StationarySetup(1, 3.0, 5, burn_in=5.0)
    a = cp.stationary_batches(s, 400, seed=3)
    b = cp.stationary_batches(s, 400, seed=3)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert a[0].shape[1:] == (11,)


def test_sample_upper_invariant_shape(rng):
    x = cp.sample_upper_invariant(2, 4, 2.0, 2.0, rng)
    assert x.shape == (9, 9) and x[0, 0] == 1


def test_burn_in_check_accepts():
    check = cp.burn_in_check(cp.StationarySetup(1, 3.0, 20, burn_in=10.0), 60, seed=1)
    assert check.dominated and check.accepted()


def test_regions():
    assert cp.box_minus(1, 2, 0).ravel().tolist() == [-2, -1, 1, 2]
    assert cp.directional_region(1, 1, 4).ravel().tolist() == [-3, -2]
    assert cp.directional_region(1, 1, 4, closed=True).ravel().tolist() == [-4, -3, -2, -1]
    assert cp.directional_region(2, 1, 2).shape == (0, 2)
    assert cp.directional_region(2, 1, 3).shape == (7, 2)


def test_conditional_infeasible_raises():
    s = cp.StationarySetup(1, 3.0, 30, burn_in=10.0)
    batches = cp.stationary_batches(s, 2000, seed=2)
    with pytest.raises(InfeasibleConditioning):
        cp.conditional_from_batches(batches, [[0]], cp.box_minus(1, 12, 0), floor=1e-4)
    pts = cp.zero_block_trend(batches, 1, [2, 12])
    assert pts[0].result.feasible and not pts[1].result.feasible


def test_duality_matches_direct_small():
    s = cp.StationarySetup(1, 3.0, 30, burn_in=20.0)
    batches = cp.stationary_batches(s, 20_000, seed=4)
    direct = cp.avoidance_direct([[0]], batches)
    dual = cp.avoidance_via_duality([[0]], 3.0, 1, 20_000, seed=5)
    assert dual.agrees(direct, k=4)
    assert cp.avoidance_via_duality(np.zeros((0, 1)), 3.0, 1, 10, 0).mean == 1.0


def test_generator_identity_small():
    lhs, rhs = cp.generator_identity_residual(1, 3.0, 1, 20_000, seed=6)
    assert lhs.agrees(rhs, k=4)


def test_survival_outcomes(rng):
    out = cp.survival_extinction([[0]], 0.1, 1, rng)
    assert out.status in ("Died", "Survived")
    died = cp.extinction_frequency([[0]], 0.2, 1, 2000, seed=1)
    assert died.mean > 0.95
    big = cp.survival_extinction([[0]], 5.0, 1, np.random.default_rng(1), t_max=1e9,
                                 size_max=30, radius=1000)
    assert big.reason in ("extinct", "size")
    with pytest.raises(ValueError):
        cp.survival_extinction(np.zeros((0, 1)), 3.0, 1, rng)
