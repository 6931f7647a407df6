"""``prlab`` command line: thin argparse layer over :mod:`prlab.harness`.

Exit codes: 0 all declared bands passed, 1 failure, 2 infeasible conditioning.
"""

import argparse
import csv
import json
import os
import sys

import jsonschema
import numpy as np

from . import __version__, harness
from . import lattice as lc
from . import set_process as sp
from .stats import InfeasibleConditioning, bernoulli_estimate

# flag dest -> experiment parameter name
_FLAG_PARAMS = {
    "lam": "lam", "dim": "d", "box": None, "horizon": "burn_in", "floor": "floor",
    "beta": "beta", "boundary": "boundary", "clamp_spec": "clamps", "sweeps": "sweeps",
}

# subcommand -> (experiment id, parameter that --box sets)
_SUBCOMMANDS = {
    "cp-stationary": ("cp-stationary", "window"),
    "cp-duality": ("cp-duality", "window"),
    "cp-generator-identity": ("cp-generator-identity", "window"),
    "cp-mixing-a": ("cp-mixing-a", "window"),
    "cp-mixing-b": ("cp-mixing-b", "window"),
    "ising-sample": ("ising-sample", "box"),
    "ising-mixture-variance": ("mixture-variance", "box"),
    "ising-decide": ("ising-decide", "box"),
}


def _common(p):
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--samples", type=int, help="number of samples / replicates")
    p.add_argument("--out", help="output directory for report JSON and CSV trends")
    p.add_argument("--param", action="append", default=[], metavar="KEY=JSON",
                   help="set any experiment parameter (value parsed as JSON)")


def _cp_flags(p):
    p.add_argument("--lambda", dest="lam", type=float, help="infection rate")
    p.add_argument("--dim", type=int, help="lattice dimension")
    p.add_argument("--box", type=int, help="observation window half-width")
    p.add_argument("--horizon", type=float, help="burn-in time before read-out")
    p.add_argument("--floor", type=float, help="conditioning-probability floor")


def _ising_flags(p):
    p.add_argument("--beta", type=float, help="inverse temperature")
    p.add_argument("--box", type=int, help="box half-width")
    p.add_argument("--boundary", choices=["plus", "minus", "free"])
    p.add_argument("--clamp-spec", dest="clamp_spec", help='clamps as "x,y=v;x,y=v"')
    p.add_argument("--sweeps", type=int, help="burn-in sweeps per chain")


def build_parser():
    parser = argparse.ArgumentParser(prog="prlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"prlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list registered experiments")
    p = sub.add_parser("run", help="run an experiment from a config file")
    _common(p)
    p.add_argument("--experiment", help="experiment id (overrides the config)")

    p = sub.add_parser("sample", help="sample the Poisson overlay of an intensity measure")
    p.add_argument("measure", help="IntensityMeasure JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--gamma", default="all",
                   help='restriction: "all", "maxsize:K", "cap:SITES:K", "avoid:SITES"')
    p.add_argument("--summary", action="store_true",
                   help="print per-site and all-zero Estimates instead of configurations")
    p.add_argument("--out", help="CSV output file (default stdout)")

    p = sub.add_parser("decide", help="decide representability of a BinaryLaw JSON")
    p.add_argument("law", help="BinaryLaw JSON file")
    p.add_argument("--tol", type=float, default=lc.DEFAULT_TOL)

    for name, (exp, _) in _SUBCOMMANDS.items():
        p = sub.add_parser(name, help=harness.REGISTRY[exp].description)
        _common(p)
        (_cp_flags if name.startswith("cp-") else _ising_flags)(p)

    p = sub.add_parser("ising-schonmann", help="row-clamp experiments, one run per m")
    _common(p)
    _ising_flags(p)
    p.add_argument("--variant", choices=["two-sided", "one-sided"], default="two-sided")
    p.add_argument("--n", type=int, help="inner half-width of the free segment")
    p.add_argument("--m", type=int, nargs="+", help="outer extent(s) of the clamp")
    return parser


def _config_for(args, experiment, box_param):
    if args.config:
        cfg = harness.load_config(args.config)
        if cfg.experiment != experiment:
            raise SystemExit(f"config is for {cfg.experiment!r}, not {experiment!r}")
    else:
        cfg = harness.ExperimentConfig(experiment)
    for dest, name in _FLAG_PARAMS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        name = box_param if dest == "box" else name
        if name not in harness.REGISTRY[experiment].defaults:
            raise SystemExit(f"--{dest.replace('_', '-')} does not apply to {experiment}")
        cfg.params[name] = value
    for item in args.param:
        key, _, raw = item.partition("=")
        try:
            cfg.params[key] = json.loads(raw)
        except json.JSONDecodeError:
            cfg.params[key] = raw
    if args.seed is not None:
        cfg.seed = args.seed
    if args.samples is not None:
        cfg.n_samples = args.samples
    if args.out is not None:
        cfg.out = args.out
    return cfg


def _summarize(report, stream=None):
    stream = stream or sys.stdout
    print(f"{report.config['experiment']}: {'PASS' if report.passed else 'FAIL'} "
          f"({report.wall_clock_seconds:.1f} s, seed {report.config['seed']})", file=stream)
    for b in report.bands:
        mark = {True: "pass", False: "FAIL", None: "n/a "}[b["passed"]]
        print(f"  [{mark}] {b['name']}", file=stream)
    for label in report.infeasible:
        print(f"  [infeasible] {label}", file=stream)


def _run(cfg):
    try:
        report = harness.run_experiment(cfg)
    except InfeasibleConditioning as exc:
        print(f"infeasible conditioning: measured {exc.measured:.3g} < floor {exc.floor:.3g}",
              file=sys.stderr)
        return harness.EXIT_INFEASIBLE
    except harness.UnknownExperiment as exc:
        print(exc, file=sys.stderr)
        return harness.EXIT_FAIL
    except jsonschema.ValidationError as exc:
        print(f"invalid config: {exc.message}", file=sys.stderr)
        return harness.EXIT_FAIL
    if cfg.out:
        _summarize(report)
    else:
        print(report.to_json())
        _summarize(report, sys.stderr)
    return report.exit_code


def _schonmann(args):
    exp = "schonmann-a" if args.variant == "two-sided" else "schonmann-b"
    ms = args.m or [harness.REGISTRY[exp].defaults["m"]]
    rows, code = [], harness.EXIT_PASS
    for m in ms:
        cfg = _config_for(args, exp, "box")
        cfg.params["m"] = m
        if args.n is not None:
            cfg.params["n"] = args.n
        cfg.out = None
        report = harness.run_experiment(cfg)
        e = report.quantities["E[Z(0)]"]
        rows.append([m, e["mean"], e["stderr"], e["n_samples"]])
        _summarize(report, sys.stderr)
        code = max(code, report.exit_code)
    text = harness.trend_csv(["m", "E[Z(0)]", "stderr", "n_samples"], rows)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        harness._atomic_write(os.path.join(args.out, f"{exp}.trend.csv"), text)
    else:
        sys.stdout.write(text)
    return code


def _sample(args):
    with open(args.measure) as fh:
        nu = lc.IntensityMeasure.from_dict(json.load(fh))
    gamma = sp.parse_gamma(args.gamma, nu.siteset)
    configs = sp.sample_overlays(nu, args.samples, np.random.default_rng(args.seed), gamma)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        n = nu.siteset.n
        if args.summary:
            w.writerow(["quantity", "mean", "stderr", "n_samples", "seed"])
            for k, site in enumerate(nu.siteset.sites):
                hits = int(((configs >> k) & 1).sum())
                e = bernoulli_estimate(hits, args.samples, args.seed)
                w.writerow([f"P(X({site})=1)", e.mean, e.stderr, e.n_samples, e.seed])
            e = bernoulli_estimate(int((configs == 0).sum()), args.samples, args.seed)
            w.writerow(["P(X=0)", e.mean, e.stderr, e.n_samples, e.seed])
        else:
            w.writerow(["mask"] + [str(s) for s in nu.siteset.sites])
            for c in configs:
                w.writerow([int(c)] + [int(c >> k) & 1 for k in range(n)])
    finally:
        if args.out:
            out.close()
    return 0


def _decide(args):
    with open(args.law) as fh:
        law = lc.BinaryLaw.from_dict(json.load(fh))
    res = lc.decide_representable(law, args.tol)
    print(json.dumps(harness._plain(res.to_dict()), indent=2))
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for eid, desc in harness.list_experiments():
            print(f"{eid:24s} {desc}")
        return 0
    if args.command == "run":
        if args.config is None and args.experiment is None:
            raise SystemExit("run needs --config or --experiment")
        cfg = harness.load_config(args.config) if args.config else harness.ExperimentConfig(
            args.experiment)
        if args.experiment:
            cfg.experiment = args.experiment
        for item in args.param:
            key, _, raw = item.partition("=")
            cfg.params[key] = json.loads(raw)
        for dest, attr in (("seed", "seed"), ("samples", "n_samples"), ("out", "out")):
            if getattr(args, dest) is not None:
                setattr(cfg, attr, getattr(args, dest))
        return _run(cfg)
    if args.command == "sample":
        return _sample(args)
    if args.command == "decide":
        return _decide(args)
    if args.command == "ising-schonmann":
        return _schonmann(args)
    exp, box_param = _SUBCOMMANDS[args.command]
    return _run(_config_for(args, exp, box_param))


if __name__ == "__main__":
    sys.exit(main())
