"""Experiment registry, configuration, declarative acceptance bands and reports.

An experiment maps ``(params, n_samples, seed)`` to an :class:`Outcome`:
named quantities (numbers, flags or Estimate dicts), declarative bands
over those quantities, verdict strings and optional trend tables.  Pass or
fail is computed from the bands alone, so any report can be rechecked from
its own contents with :func:`recheck_report`.
"""

from dataclasses import dataclass, field
from importlib import resources
import csv
import io
import json
import math
import os
import tempfile
import time

import jsonschema
import numpy as np
from scipy import stats as sps

from . import __version__
from . import contact as cp
from . import ising
from . import lattice as lc
from . import set_process as sp
from .seeding import derive_seed, replicate_rng
from .stats import Estimate, InfeasibleConditioning, mean_estimate

SCHEMA_VERSION = "1"

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INFEASIBLE = 2

__all__ = ["ExperimentConfig", "Report", "Outcome", "Experiment", "REGISTRY", "derive_seed",
           "run_experiment", "load_config", "evaluate_band", "recheck_report", "list_experiments",
           "UnknownExperiment"]


class UnknownExperiment(KeyError):
    def __str__(self):
        return self.args[0]


def _schema(name):
    return json.loads(resources.files("prlab").joinpath("schemas", name).read_text())


# ---------------------------------------------------------------- quantities and bands


def _est(e: Estimate):
    return e.to_dict()


def _value(q):
    return q["mean"] if isinstance(q, dict) else q


def _se(q):
    return q["stderr"] if isinstance(q, dict) else 0.0


def evaluate_band(band, quantities):
    """Evaluate one declarative band; returns True, False, or None (not applicable)."""
    kind = band["kind"]
    if kind == "monotone":
        qs = [quantities.get(name) for name in band["quantities"]]
        qs = [q for q in qs if q is not None]
        if len(qs) < 2:
            return None
        k, sign = band.get("k", 3.0), 1 if band["direction"] == "increasing" else -1
        return all(sign * (_value(b) - _value(a)) >= -k * math.hypot(_se(a), _se(b))
                   for a, b in zip(qs, qs[1:]))
    if kind == "agree":
        a, b = quantities[band["a"]], quantities[band["b"]]
        return abs(_value(a) - _value(b)) <= band.get("k", 4.0) * math.hypot(_se(a), _se(b))
    q = quantities.get(band["quantity"])
    if q is None:
        return None
    if kind == "is_true":
        return bool(q)
    if kind == "abs_le":
        return abs(_value(q)) <= band["bound"]
    if kind == "lt":
        return _value(q) + band.get("k", 0.0) * _se(q) < band["value"]
    if kind == "gt":
        return _value(q) - band.get("k", 0.0) * _se(q) > band["value"]
    if kind == "in_range":
        return band["lo"] <= _value(q) <= band["hi"]
    raise ValueError(f"unknown band kind {kind!r}")


def _judge(bands, quantities):
    judged = []
    for b in bands:
        result = evaluate_band(b, quantities)
        judged.append({**b, "passed": result})
    ok = all(b["passed"] is not False for b in judged)
    return judged, ok


# ---------------------------------------------------------------- config / report types


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    n_samples: int | None = None
    seed: int = 0
    out: str | None = None

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, "experiment": self.experiment,
                "params": self.params, "n_samples": self.n_samples, "seed": self.seed,
                "out": self.out}

    @classmethod
    def from_dict(cls, data):
        jsonschema.validate(data, _schema("config.schema.json"))
        return cls(data["experiment"], dict(data.get("params", {})), data.get("n_samples"),
                   int(data.get("seed", 0)), data.get("out"))


def load_config(path):
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


@dataclass
class Outcome:
    quantities: dict
    bands: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    trends: dict = field(default_factory=dict)      # name -> (header, rows)
    infeasible: list = field(default_factory=list)


@dataclass
class Report:
    config: dict
    quantities: dict
    bands: list
    verdicts: dict
    passed: bool
    infeasible: list
    trends: dict
    wall_clock_seconds: float
    version: str = __version__

    def to_dict(self, wall_clock=True):
        out = {"schema_version": SCHEMA_VERSION, "version": self.version, "config": self.config,
               "quantities": self.quantities, "bands": self.bands, "verdicts": self.verdicts,
               "passed": self.passed, "infeasible": self.infeasible,
               "trends": {k: {"header": h, "rows": r} for k, (h, r) in self.trends.items()}}
        if wall_clock:
            out["wall_clock_seconds"] = self.wall_clock_seconds
        return out

    def to_json(self, wall_clock=True):
        return json.dumps(_plain(self.to_dict(wall_clock)), indent=2, sort_keys=True)

    @property
    def exit_code(self):
        return EXIT_PASS if self.passed else EXIT_FAIL


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def recheck_report(report: dict):
    """Recompute every band's verdict from the report's own quantities."""
    bands = [{k: v for k, v in b.items() if k != "passed"} for b in report["bands"]]
    judged, ok = _judge(bands, report["quantities"])
    return ok and all(a["passed"] == b["passed"] for a, b in zip(judged, report["bands"]))


# ---------------------------------------------------------------- experiments


@dataclass
class Experiment:
    id: str
    description: str
    run: object
    defaults: dict
    default_samples: int
    param_schema: dict = field(default_factory=dict)

    def params_schema(self):
        props = {k: {} for k in self.defaults}
        props.update(self.param_schema)
        return {"type": "object", "properties": props, "additionalProperties": False}


REGISTRY: dict[str, Experiment] = {}


def register(id, description, defaults, default_samples, **schema):
    def wrap(fn):
        REGISTRY[id] = Experiment(id, description, fn, defaults, default_samples, schema)
        return fn
    return wrap


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer", "minimum": 0}
_PINT = {"type": "integer", "minimum": 1}
_INTS = {"type": "array", "items": _INT, "minItems": 1}


def _fixed_measures():
    """Three test measures: a hand-written one and two seeded random ones."""
    a = lc.IntensityMeasure.from_sets(lc.SiteSet([1, 2]), {(1,): 0.5, (2,): 0.3, (1, 2): 0.2})
    b = lc.random_intensity(lc.SiteSet.range(6), np.random.default_rng(1001))
    c = lc.random_intensity(lc.SiteSet.range(8), np.random.default_rng(1002))
    return [("hand-2", a), ("random-6", b), ("random-8", c)]


@register("decider-roundtrip", "Random intensities -> exact law -> decider recovers every atom.",
          {"max_sites": 12, "tol": 1e-9}, 200, max_sites={"type": "integer", "minimum": 1,
                                                           "maximum": 20}, tol=_POS)
def _decider_roundtrip(p, n, seed):
    worst, bad, repro = 0.0, 0, 0.0
    for r in range(n):
        rng = replicate_rng(seed, r)
        ss = lc.SiteSet.range(int(rng.integers(1, p["max_sites"] + 1)))
        nu = lc.random_intensity(ss, rng)
        res = lc.decide_representable(lc.law_from_intensity(nu))
        if res.verdict != "Representable":
            bad += 1
            continue
        worst = max(worst, float(np.abs(res.recovered.dense() - nu.dense()).max()))
        repro = max(repro, res.reproduction_error)
    q = {"n_measures": n, "n_not_representable": bad, "all_representable": bad == 0,
         "max_atom_error": worst, "max_reproduction_error": repro}
    bands = [{"name": "all representable", "kind": "is_true", "quantity": "all_representable"},
             {"name": "atoms recovered", "kind": "abs_le", "quantity": "max_atom_error",
              "bound": p["tol"]}]
    return Outcome(q, bands)


@register("decider-witness", "Anticorrelated two-site law yields a negative-mass witness.",
          {"p00": 0.1, "p01": 0.4, "p10": 0.4, "p11": 0.1, "tol": 1e-12}, 1,
          p00=_NUM, p01=_NUM, p10=_NUM, p11=_NUM, tol=_POS)
def _decider_witness(p, n, seed):
    law = lc.BinaryLaw(lc.SiteSet([1, 2]), [p["p00"], p["p10"], p["p01"], p["p11"]])
    res = lc.decide_representable(law)
    w = res.witness or {}
    # two sites: nu({1,2}) = log h(empty) - log h({1}) - log h({2}), h(A) = P(X subset of A)
    expected = math.log(p["p00"] / ((p["p00"] + p["p10"]) * (p["p00"] + p["p01"])))
    mass = w.get("mass")
    q = {"witness_kind": w.get("kind"), "witness_set": w.get("set"), "witness_mass": mass,
         "expected_mass": expected, "not_representable": res.verdict == "NotRepresentable",
         "mass_error": None if mass is None else mass - expected}
    bands = [{"name": "not representable", "kind": "is_true", "quantity": "not_representable"},
             {"name": "witness mass", "kind": "abs_le", "quantity": "mass_error",
              "bound": p["tol"]}]
    return Outcome(q, bands, {"law": res.verdict})


@register("ising-1d-decide", "Exact 1-D Ising path laws are representable.",
          {"length": 8, "betas": [0.2, 0.5, 1.0], "boundary": "free", "repro_tol": 1e-8}, 1,
          length={"type": "integer", "minimum": 1, "maximum": 20},
          betas={"type": "array", "items": {"type": "number", "minimum": 0}},
          boundary={"enum": list(ising.BOUNDARIES)}, repro_tol=_POS)
def _ising_1d(p, n, seed):
    q, bands, verdicts = {}, [], {}
    for beta in p["betas"]:
        res = lc.decide_representable(ising.exact_small_law(
            ising.path_box(p["length"], beta, p["boundary"])))
        key = f"beta={beta}"
        verdicts[key] = res.verdict
        q[f"{key}:representable"] = res.verdict == "Representable"
        q[f"{key}:reproduction_error"] = res.reproduction_error
        bands += [{"name": f"{key} representable", "kind": "is_true",
                   "quantity": f"{key}:representable"},
                  {"name": f"{key} reproduction", "kind": "abs_le",
                   "quantity": f"{key}:reproduction_error", "bound": p["repro_tol"]}]
    return Outcome(q, bands, verdicts)


@register("ising-decide", "Exact small-box Ising law piped into the decider.",
          {"d": 2, "box": 1, "beta": 1.0, "boundary": "plus", "clamps": ""}, 1,
          d=_PINT, box=_INT, beta={"type": "number", "minimum": 0},
          boundary={"enum": list(ising.BOUNDARIES)}, clamps={"type": "string"})
def _ising_decide(p, n, seed):
    box = ising.IsingBox(p["d"], p["box"], p["beta"], p["boundary"],
                         ising.parse_clamp_spec(p["clamps"]))
    res = lc.decide_representable(ising.exact_small_law(box))
    q = {"verdict": res.verdict, "witness": res.witness,
         "reproduction_error": res.reproduction_error,
         "n_recovered_atoms": None if res.recovered is None else int(res.recovered.masks.size)}
    return Outcome(q, [], {"law": res.verdict})


@register("restriction-exact", "Zero-conditioning equals restriction of the intensity (exact).",
          {"n_sites": 8, "tol": 1e-10}, 50,
          n_sites={"type": "integer", "minimum": 1, "maximum": 16}, tol=_POS)
def _restriction_exact(p, n, seed):
    worst = 0.0
    for r in range(n):
        rng = replicate_rng(seed, r)
        ss = lc.SiteSet.range(p["n_sites"])
        nu = lc.random_intensity(ss, rng)
        w = int(rng.integers(0, ss.full + 1))
        lhs = lc.restrict_law_to_zeros(lc.law_from_intensity(nu), w)
        rhs = lc.law_from_intensity(nu.on_sites(ss.full ^ w))
        worst = max(worst, float(np.abs(lhs.probs - rhs.probs).max()))
    q = {"n_measures": n, "max_entry_error": worst}
    return Outcome(q, [{"name": "restriction", "kind": "abs_le", "quantity": "max_entry_error",
                        "bound": p["tol"]}])


@register("sampler-fidelity", "Poisson overlay avoidance frequencies vs exp(-nu(S_Delta)).",
          {"k": 4.0}, 1_000_000, k=_POS)
def _sampler_fidelity(p, n, seed):
    q, rows = {}, []
    worst = 0.0
    for i, (name, nu) in enumerate(_fixed_measures()):
        configs = sp.sample_overlays(nu, n, replicate_rng(seed, i))
        freq, se = sp.avoidance_frequencies(configs, nu.siteset.n)
        for delta in range(1, 1 << nu.siteset.n):
            exact = lc.avoidance_prob(nu, delta)
            z = (freq[delta] - exact) / se[delta] if se[delta] > 0 else (
                0.0 if freq[delta] == exact else math.inf)
            worst = max(worst, abs(z))
            rows.append([name, delta, freq[delta], se[delta], exact, z])
        q[f"{name}:n_deltas"] = (1 << nu.siteset.n) - 1
    q["max_abs_z"] = worst
    return Outcome(q, [{"name": "all deltas within k stderr", "kind": "abs_le",
                        "quantity": "max_abs_z", "bound": p["k"]}],
                   trends={"avoidance": (["measure", "delta_mask", "frequency", "stderr",
                                          "exact", "z"], rows)})


@register("restriction-check", "Rejection-sampled conditional vs restricted-measure avoidance.",
          {"n_sites": 8, "k": 4.0, "floor": 1e-4, "measure_seed": 7}, 200_000,
          n_sites={"type": "integer", "minimum": 2, "maximum": 16}, k=_POS, floor=_POS,
          measure_seed=_INT)
def _restriction_check(p, n, seed):
    rng = np.random.default_rng(p["measure_seed"])
    ss = lc.SiteSet.range(p["n_sites"])
    nu = lc.random_intensity(ss, rng, total=1.0)
    w, delta = 0b11, 0b1100
    est, exact = sp.conditional_vs_restriction_check(nu, w, delta, n, replicate_rng(seed, 0),
                                                     floor=p["floor"])
    q = {"conditional": _est(est), "exact": exact, "w_mask": w, "delta_mask": delta}
    return Outcome(q, [{"name": "agreement", "kind": "agree", "a": "conditional", "b": "exact",
                        "k": p["k"]}])


# -------------------------------------------------------------- contact process

_CP = {"lam": _POS, "d": {"type": "integer", "minimum": 1, "maximum": 3}, "window": _PINT,
       "burn_in": _POS, "floor": _POS, "k": _POS}


def _setup(p):
    return cp.StationarySetup(p["d"], p["lam"], p["window"], burn_in=p["burn_in"])


@register("cp-stationary", "Stationary snapshots: density, burn-in (T vs 2T) check.",
          {"lam": 3.0, "d": 1, "window": 60, "burn_in": 20.0, "burn_in_records": 200}, 100_000,
          burn_in_records=_PINT, **_CP)
def _cp_stationary(p, n, seed):
    setup = _setup(p)
    batches = cp.stationary_batches(setup, n, seed)
    check = cp.burn_in_check(setup, p["burn_in_records"], derive_seed(seed, 1 << 32))
    d = p["d"]
    o = np.zeros((1, d), dtype=np.int64)
    q = {"density": _est(cp.pattern_probability(batches, ones=o, seed=seed)),
         "p_zero_origin": _est(cp.avoidance_direct(o, batches, seed)),
         "burn_in_short": _est(check.short), "burn_in_long": _est(check.long),
         "burn_in_z": check.z, "burn_in_dominated": check.dominated,
         "burn_in_accepted": check.accepted(), "box_radius": setup.box_radius}
    return Outcome(q, [{"name": "burn-in accepted", "kind": "is_true",
                        "quantity": "burn_in_accepted"}])


@register("cp-duality", "Avoidance by duality (extinction) vs direct stationary estimates.",
          {"lam": 3.0, "d": 1, "window": 60, "burn_in": 20.0, "direct_samples": 200_000,
           "deltas": [[[0]], [[0], [1]]], "k": 4.0}, 100_000,
          direct_samples=_PINT, deltas={"type": "array"}, **_CP)
def _cp_duality(p, n, seed):
    batches = cp.stationary_batches(_setup(p), p["direct_samples"], seed)
    q, bands = {}, []
    for i, delta in enumerate(p["deltas"]):
        key = "delta=" + ";".join(",".join(str(c) for c in s) for s in delta)
        dual = cp.avoidance_via_duality(delta, p["lam"], p["d"], n, derive_seed(seed, i + 1))
        q[f"{key}:duality"] = _est(dual)
        q[f"{key}:direct"] = _est(cp.avoidance_direct(delta, batches, seed))
        bands.append({"name": key, "kind": "agree", "a": f"{key}:duality",
                      "b": f"{key}:direct", "k": p["k"]})
    q["cutoffs"] = cp.default_cutoffs(p["lam"], p["d"])
    return Outcome(q, bands)


@register("cp-generator-identity", "Stationarity identity for the zero-box indicator.",
          {"lam": 3.0, "d": 1, "m": 2, "window": None, "burn_in": None, "k": 4.0}, 100_000,
          m=_INT, **{**_CP, "window": {"type": ["integer", "null"]},
                     "burn_in": {"type": ["number", "null"]}})
def _cp_generator(p, n, seed):
    window = p["window"] or p["m"] + 4
    setup = cp.default_setup(p["d"], p["lam"], window, p["burn_in"])
    lhs, rhs = cp.generator_identity_residual(p["m"], p["lam"], p["d"], n, seed, setup=setup)
    q = {"lhs": _est(lhs), "rhs": _est(rhs), "z": lhs.z_to(rhs)}
    return Outcome(q, [{"name": "lhs = rhs", "kind": "agree", "a": "lhs", "b": "rhs",
                        "k": p["k"]}])


def _trend_rows(points):
    rows = []
    for t in points:
        r = t.result
        e = r.estimate
        rows.append([t.param, None if e is None else e.mean, None if e is None else e.stderr,
                     r.conditioning.mean, r.feasible])
    return rows


@register("cp-mixing-b", "Zero block given zeros on the annulus: increasing in m.",
          {"lam": 3.0, "d": 1, "window": 60, "burn_in": 20.0, "n": 1, "ms": [2, 3, 4, 5, 6],
           "isolated_ns": [1, 2, 3, 4], "floor": 1e-4, "k": 3.0, "threshold": 0.5}, 1_000_000,
          n=_INT, ms=_INTS, isolated_ns=_INTS, threshold=_NUM, **_CP)
def _cp_mixing_b(p, n, seed):
    batches = cp.stationary_batches(_setup(p), n, seed)
    trend = cp.zero_block_trend(batches, p["n"], p["ms"], p["floor"], seed)
    iso = cp.isolated_zero_trend(batches, p["isolated_ns"], p["floor"], seed)
    q = {}
    for t in trend:
        q[f"m={t.param}"] = None if t.result.estimate is None else _est(t.result.estimate)
        q[f"m={t.param}:conditioning"] = _est(t.result.conditioning)
    for t in iso:
        q[f"isolated n={t.param}"] = None if t.result.estimate is None else _est(t.result.estimate)
    feasible = [t.param for t in trend if t.result.feasible]
    q["largest_feasible_m"] = max(feasible) if feasible else None
    bands = [{"name": "increasing in m", "kind": "monotone", "direction": "increasing",
              "quantities": [f"m={m}" for m in p["ms"]], "k": p["k"]}]
    if feasible:
        bands.append({"name": f"exceeds {p['threshold']} at largest feasible m", "kind": "gt",
                      "quantity": f"m={max(feasible)}", "value": p["threshold"]})
    header = ["param", "estimate", "stderr", "conditioning_probability", "feasible"]
    return Outcome(q, bands, trends={"zero_block": (header, _trend_rows(trend)),
                                     "isolated_zero": (header, _trend_rows(iso))},
                   infeasible=[t.result.label for t in trend + iso if not t.result.feasible])


@register("cp-mixing-a", "Directional conditioning: gap to the unconditional law shrinks in n.",
          {"lam": 3.0, "d": 1, "window": 60, "burn_in": 20.0, "m": 6, "ns": [1, 2, 3],
           "floor": 1e-4, "k": 3.0}, 1_000_000, m=_INT, ns=_INTS, **_CP)
def _cp_mixing_a(p, n, seed):
    d = p["d"]
    batches = cp.stationary_batches(_setup(p), n, seed)
    o = np.zeros((1, d), dtype=np.int64)
    base = cp.avoidance_direct(o, batches, seed)
    q = {"unconditional": _est(base)}
    trends, infeasible, bands = {}, [], []
    for reading, closed in (("open", False), ("closed", True)):
        pts = cp.directional_trend(batches, p["ns"], p["m"], closed=closed, floor=p["floor"],
                                   seed=seed)
        for t in pts:
            e = t.result.estimate
            q[f"{reading} n={t.param}"] = None if e is None else _est(e)
            q[f"{reading} gap n={t.param}"] = None if e is None else {
                "mean": e.mean - base.mean, "stderr": math.hypot(e.stderr, base.stderr),
                "n_samples": e.n_samples, "seed": seed}
            if not t.result.feasible:
                infeasible.append(f"{reading} {t.result.label}")
        trends[f"directional_{reading}"] = (
            ["n", "estimate", "stderr", "conditioning_probability", "feasible"], _trend_rows(pts))
        bands.append({"name": f"gap shrinking ({reading} reading)", "kind": "monotone",
                      "direction": "decreasing", "k": p["k"],
                      "quantities": [f"{reading} gap n={n_}" for n_ in p["ns"]]})
    return Outcome(q, bands, trends=trends, infeasible=infeasible)


# -------------------------------------------------------------- Ising

_IS = {"beta": {"type": "number", "minimum": 0}, "box": _INT, "sweeps": _PINT, "k": _POS,
       "thin": _PINT, "chains": {"type": "integer", "minimum": 2}}


@register("ising-sample", "Heat-bath samples: magnetization per independent chain.",
          {"d": 2, "box": 8, "beta": 0.6, "boundary": "plus", "clamps": "", "sweeps": 1000,
           "thin": 10, "chains": 10}, 1000, d=_PINT, boundary={"enum": list(ising.BOUNDARIES)},
          clamps={"type": "string"}, **_IS)
def _ising_sample(p, n, seed):
    box = ising.IsingBox(p["d"], p["box"], p["beta"], p["boundary"],
                         ising.parse_clamp_spec(p["clamps"]))
    per = max(1, math.ceil(n / p["chains"]))
    chains = ising.independent_chains(box, p["chains"], per, seed, p["sweeps"], p["thin"])
    mags = [c.mean(axis=1) for c in chains]
    est = mean_estimate([m.mean() for m in mags], seed)
    q = {"magnetization": _est(Estimate(est.mean, est.stderr, per * p["chains"], seed)),
         "burn_in_coalesced": ising.coalescence_check(box, p["sweeps"], seed)
         if box.size <= 20_000 else None}
    rows = [[c, s, float(v)] for c, m in enumerate(mags) for s, v in enumerate(m)]
    return Outcome(q, trends={"magnetization": (["chain", "sample", "magnetization"], rows)})


def _chi2_exact(box, n, seed, chains, burn_in, thin):
    exact = ising.exact_small_law(box).probs
    per = max(1, math.ceil(n / chains))
    x = np.concatenate(ising.independent_chains(box, chains, per, seed, burn_in, thin))
    masks = (x.astype(np.int64) << np.arange(box.size)).sum(axis=1)
    counts = np.bincount(masks, minlength=exact.size).astype(np.float64)
    expected = exact * counts.sum()
    # pool cells with small expectation into one bin
    small = expected < 5
    obs = np.append(counts[~small], counts[small].sum())
    exp = np.append(expected[~small], expected[small].sum())
    if exp[-1] == 0:
        obs, exp = obs[:-1], exp[:-1]
    return float(sps.chisquare(obs, exp).pvalue), int(counts.sum()), int(obs.size)


@register("ising-exactness", "Heat-bath frequencies vs exact enumeration (chi-square).",
          {"box": 1, "betas": [0.3, 0.6], "boundary": "free", "chains": 50, "sweeps": 200,
           "thin": 10, "alpha": 0.01}, 200_000,
          betas={"type": "array", "items": {"type": "number", "minimum": 0}},
          boundary={"enum": list(ising.BOUNDARIES)}, alpha=_POS, **_IS)
def _ising_exactness(p, n, seed):
    q, bands = {}, []
    for i, beta in enumerate(p["betas"]):
        box = ising.IsingBox(2, p["box"], beta, p["boundary"])
        pval, total, cells = _chi2_exact(box, n, derive_seed(seed, i), p["chains"],
                                         p["sweeps"], p["thin"])
        q[f"beta={beta}:p_value"] = pval
        q[f"beta={beta}:samples"] = total
        q[f"beta={beta}:cells"] = cells
        bands.append({"name": f"chi-square beta={beta}", "kind": "gt",
                      "quantity": f"beta={beta}:p_value", "value": p["alpha"]})
    return Outcome(q, bands)


def _schonmann(variant_cls, direction):
    def run(p, n, seed):
        v = variant_cls(p["n"], p["m"])
        est = ising.schonmann_mixing_experiment(v, p["beta"], p["box"], p["sweeps"], n, seed,
                                                p["chains"], p["thin"])
        box = ising.schonmann_box(v, p["beta"], p["box"])
        q = {"E[Z(0)]": _est(est), "variant": v.label,
             "burn_in_coalesced": ising.coalescence_check(box, p["sweeps"],
                                                          derive_seed(seed, 1 << 32))}
        band = {"name": f"E[Z(0)] {'<' if direction == 'lt' else '>'} 0.5 by k stderr",
                "kind": direction, "quantity": "E[Z(0)]", "value": 0.5, "k": p["k"]}
        return Outcome(q, [band])
    return run


_SCH_DEFAULTS = {"beta": 0.6, "box": 48, "n": 2, "m": 20, "sweeps": 20_000, "thin": 40,
                 "chains": 20, "k": 4.0}
register("schonmann-a", "Two-sided zero clamp on the row pulls Z(0) to the minus phase.",
         _SCH_DEFAULTS, 10_000, n=_INT, m=_INT, **_IS)(_schonmann(ising.TwoSided, "lt"))
register("schonmann-b", "One-sided zero clamp leaves Z(0) in the plus phase.",
         _SCH_DEFAULTS, 10_000, n=_INT, m=_INT, **_IS)(_schonmann(ising.OneSided, "gt"))


@register("mixture-variance", "Ergodic-average variance: phase mixture vs single phase.",
          {"alpha": 0.5, "beta": 0.6, "box": 48, "ns": [8, 16, 24], "c": 0.5, "per_batch": 20,
           "sweeps": 500, "thin": 10, "floor": 0.1, "k": 3.0, "exceed_lo": 0.4,
           "exceed_hi": 0.6}, 400,
          alpha={"type": "number", "minimum": 0, "maximum": 1}, ns=_INTS, c=_NUM,
          per_batch=_PINT, floor=_NUM, exceed_lo=_NUM, exceed_hi=_NUM, **_IS)
def _mixture_variance(p, n, seed):
    box = ising.IsingBox(2, p["box"], p["beta"], "plus")
    mix = ising.mixture_batch_sampler(p["alpha"], box, p["per_batch"], p["sweeps"], p["thin"])
    plus = ising.phase_batch_sampler(box, p["per_batch"], p["sweeps"], p["thin"])
    mix_stats = ising.variance_curve(mix, p["c"], p["ns"], n, seed)
    plus_stats = ising.variance_curve(plus, p["c"], p["ns"], n, derive_seed(seed, 1 << 32))
    q, bands, rows = {}, [], []
    for ms, ps in zip(mix_stats, plus_stats):
        q[f"mixture var n={ms.n}"] = _est(ms.variance)
        q[f"mixture exceedance n={ms.n}"] = _est(ms.exceedance)
        q[f"mixture mean n={ms.n}"] = _est(ms.mean)
        q[f"plus var n={ps.n}"] = _est(ps.variance)
        q[f"plus mean n={ps.n}"] = _est(ps.mean)
        bands += [{"name": f"mixture variance above floor n={ms.n}", "kind": "gt",
                   "quantity": f"mixture var n={ms.n}", "value": p["floor"], "k": p["k"]},
                  {"name": f"exceedance in range n={ms.n}", "kind": "in_range",
                   "quantity": f"mixture exceedance n={ms.n}", "lo": p["exceed_lo"],
                   "hi": p["exceed_hi"]}]
        rows.append([ms.n, ms.variance.mean, ms.variance.stderr, ps.variance.mean,
                     ps.variance.stderr, ms.exceedance.mean, ms.exceedance.stderr])
    bands.append({"name": "plus variance decreasing", "kind": "monotone",
                  "direction": "decreasing", "k": p["k"],
                  "quantities": [f"plus var n={n_}" for n_ in p["ns"]]})
    header = ["n", "mixture_var", "mixture_var_stderr", "plus_var", "plus_var_stderr",
              "exceedance", "exceedance_stderr"]
    return Outcome(q, bands, trends={"variance": (header, rows)})


@register("dfkg-necessity", "Pairwise conditional covariances of representable laws are >= 0.",
          {"max_sites": 8, "tol": 1e-12}, 50,
          max_sites={"type": "integer", "minimum": 2, "maximum": 12}, tol=_POS)
def _dfkg(p, n, seed):
    worst = math.inf
    for r in range(n):
        rng = replicate_rng(seed, r)
        ss = lc.SiteSet.range(int(rng.integers(2, p["max_sites"] + 1)))
        value, _ = lc.dfkg_min_covariance(lc.law_from_intensity(lc.random_intensity(ss, rng)))
        worst = min(worst, value)
    q = {"min_covariance": worst, "n_laws": n}
    return Outcome(q, [{"name": "covariances nonnegative", "kind": "gt",
                        "quantity": "min_covariance", "value": -p["tol"]}])


# ---------------------------------------------------------------- running


def list_experiments():
    return [(e.id, e.description) for e in REGISTRY.values()]


def resolve(config: ExperimentConfig):
    """Validate ``config`` and fill defaults; returns ``(experiment, params, n_samples)``."""
    if config.experiment not in REGISTRY:
        raise UnknownExperiment(f"unknown experiment {config.experiment!r}; available: "
                                + ", ".join(sorted(REGISTRY)))
    exp = REGISTRY[config.experiment]
    jsonschema.validate(config.params, exp.params_schema())
    params = {**exp.defaults, **config.params}
    n = config.n_samples if config.n_samples is not None else exp.default_samples
    if n < 1:
        raise ValueError("n_samples must be >= 1")
    return exp, params, int(n)


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trend_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(_plain(rows))
    return buf.getvalue()


def run_experiment(config: ExperimentConfig) -> Report:
    """Run one experiment; write ``report.json`` and trend CSVs when ``config.out`` is set.

    :class:`~prlab.stats.InfeasibleConditioning` from the modules propagates.
    """
    exp, params, n = resolve(config)
    t0 = time.perf_counter()
    outcome = exp.run(params, n, config.seed)
    wall = time.perf_counter() - t0
    judged, ok = _judge(outcome.bands, outcome.quantities)
    echo = {**config.to_dict(), "params": params, "n_samples": n}
    report = Report(_plain(echo), _plain(outcome.quantities), _plain(judged),
                    outcome.verdicts, ok, outcome.infeasible, outcome.trends, wall)
    if config.out:
        _atomic_write(os.path.join(config.out, f"{exp.id}.report.json"), report.to_json())
        for name, (header, rows) in outcome.trends.items():
            _atomic_write(os.path.join(config.out, f"{exp.id}.{name}.csv"),
                          trend_csv(header, rows))
    return report


def exit_code_for(exc):
    return EXIT_INFEASIBLE if isinstance(exc, InfeasibleConditioning) else EXIT_FAIL
