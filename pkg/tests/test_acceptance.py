"""The thirteen acceptance criteria, each at its stated tolerance and runtime budget.

Every criterion records one ``PASS``/``FAIL`` line, printed in the terminal
summary.  Run just these with ``pytest tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from prlab import contact as cp
from prlab.geometry import Grid
from prlab.harness import ExperimentConfig, run_experiment
from _oracles import brute_active_path


def _record(number, title, passed, elapsed, budget, detail=""):
    ok = passed and elapsed < budget
    line = (f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}: {detail} "
            f"({elapsed:.1f} s, budget {budget:.0f} s)")
    ACCEPTANCE[number] = line
    print(line)
    return ok


def _run(experiment, params=None, n=None, seed=0):
    report = run_experiment(ExperimentConfig(experiment, params or {}, seed=seed, n_samples=n))
    return report


def _failed_bands(*reports):
    return [b["name"] for r in reports for b in r.bands if b["passed"] is False]


def _check(number, title, budget, reports, detail):
    elapsed = sum(r.wall_clock_seconds for r in reports)
    bad = _failed_bands(*reports)
    ok = _record(number, title, not bad, elapsed, budget,
                 detail + (f"; failed bands {bad}" if bad else ""))
    assert ok, ACCEPTANCE[number]


def _z(q, key):
    return f"{q[key]['mean']:.4g}+-{q[key]['stderr']:.2g}"


def test_01_decider_roundtrip():
    r = _run("decider-roundtrip", {"max_sites": 12, "tol": 1e-9}, 200)
    q = r.quantities
    _check(1, "decider round trip", 60, [r],
           f"{q['n_measures']} measures, max atom error {q['max_atom_error']:.2e}")


def test_02_decider_witness():
    r = _run("decider-witness", {"tol": 1e-12})
    q = r.quantities
    assert abs(q["expected_mass"] - np.log(0.4)) < 1e-15
    _check(2, "negativity witness", 1, [r],
           f"verdict {r.verdicts['law']}, nu({{1,2}}) = {q['witness_mass']:.15f}")


def test_03_ising_1d():
    r = _run("ising-1d-decide", {"length": 8, "betas": [0.2, 0.5, 1.0], "repro_tol": 1e-8})
    _check(3, "1-D Ising representability", 10, [r],
           ", ".join(f"{k} {v}" for k, v in r.verdicts.items()))


def test_04_restriction_exact():
    r = _run("restriction-exact", {"n_sites": 8, "tol": 1e-10}, 50)
    _check(4, "restriction theorem", 60, [r],
           f"max entry error {r.quantities['max_entry_error']:.2e}")


def test_05_sampler_fidelity():
    r = _run("sampler-fidelity", {"k": 4.0}, 1_000_000)
    _check(5, "sampler fidelity", 120, [r], f"max |z| {r.quantities['max_abs_z']:.2f}")


def test_06_cp_oracle_equivalence():
    rng = np.random.default_rng(606)
    shapes = [(1,), (2,), (3,), (4,), (5,), (2, 2)]
    start = time.perf_counter()
    mismatches = 0
    for _ in range(500):
        grid = Grid(shapes[int(rng.integers(0, len(shapes)))])
        horizon = float(rng.uniform(0, 2))
        rec = cp.build_record(grid, horizon, float(rng.uniform(0.2, 4)), rng)
        n = grid.size
        init = rng.integers(0, 2, n).astype(np.uint8)
        times = np.sort(rng.uniform(0, horizon, 3))
        got = cp.evolve(rec, init, times).configs
        for i, t in enumerate(times):
            want = [int(any(init[x] and brute_active_path(rec, x, 0.0, y, t) for x in range(n)))
                    for y in range(n)]
            mismatches += got[i].tolist() != want
    elapsed = time.perf_counter() - start
    ok = _record(6, "CP oracle equivalence", mismatches == 0, elapsed, 60,
                 f"500 records x 3 times, {mismatches} mismatches")
    assert ok, ACCEPTANCE[6]


def test_07_cp_generator_identity():
    a = _run("cp-generator-identity", {"d": 1, "lam": 3.0, "m": 2}, 100_000)
    b = _run("cp-generator-identity", {"d": 2, "lam": 2.0, "m": 1, "window": 12}, 200_000)
    _check(7, "CP generator identity", 600, [a, b],
           f"d=1 z={a.quantities['z']:.2f}, d=2 z={b.quantities['z']:.2f}")


def test_08_cp_duality():
    r = _run("cp-duality", {"d": 1, "lam": 3.0}, 100_000)
    q = r.quantities
    _check(8, "CP duality", 300, [r],
           f"{{o}} {_z(q, 'delta=0:duality')} vs {_z(q, 'delta=0:direct')}, "
           f"pair {_z(q, 'delta=0;1:duality')} vs {_z(q, 'delta=0;1:direct')}")


def test_09_cp_mixing_trends():
    b = _run("cp-mixing-b", {"d": 1, "lam": 3.0}, 1_000_000)
    a = _run("cp-mixing-a", {"d": 1, "lam": 3.0, "m": 6}, 1_000_000)
    lf = b.quantities["largest_feasible_m"]
    gaps = [a.quantities[f"open gap n={n}"]["mean"] for n in (1, 2, 3)]
    _check(9, "CP mixing trends", 1800, [a, b],
           f"(b) largest feasible m={lf} at {_z(b.quantities, f'm={lf}')}, "
           f"infeasible {b.infeasible or 'none'}; (a) open gaps "
           + ", ".join(f"{g:.3f}" for g in gaps))


def test_10_ising_exactness():
    r = _run("ising-exactness", {"betas": [0.3, 0.6], "box": 1, "boundary": "free"})
    _check(10, "Ising sampler exactness", 300, [r],
           ", ".join(f"{k} {v:.3f}" for k, v in r.quantities.items() if k.endswith("p_value")))


def test_11_schonmann():
    p = {"beta": 0.6, "box": 48, "n": 2, "m": 20, "k": 4.0}
    a = _run("schonmann-a", p)
    b = _run("schonmann-b", p)
    _check(11, "Schonmann dichotomy", 1200, [a, b],
           f"two-sided {_z(a.quantities, 'E[Z(0)]')}, one-sided {_z(b.quantities, 'E[Z(0)]')}")


def test_12_mixture_variance():
    r = _run("mixture-variance", {"alpha": 0.5, "beta": 0.6, "ns": [8, 16, 24]})
    q = r.quantities
    _check(12, "mixture bimodality", 1200, [r],
           "mixture var " + ", ".join(f"{q[f'mixture var n={n}']['mean']:.3f}"
                                      for n in (8, 16, 24))
           + "; plus var " + ", ".join(f"{q[f'plus var n={n}']['mean']:.2e}"
                                       for n in (8, 16, 24))
           + f"; exceedance {_z(q, 'mixture exceedance n=24')}")


def test_13_dfkg():
    r = _run("dfkg-necessity", {"max_sites": 8, "tol": 1e-12}, 50)
    _check(13, "d-FKG necessity", 60, [r], f"min covariance {r.quantities['min_covariance']:.2e}")
