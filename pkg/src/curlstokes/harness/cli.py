"""Command line entry point: ``curlstokes solve`` and ``curlstokes probe``.

Every flag can also be given in a TOML file passed with ``--config``; keys
are the long flag names (dashes or underscores). Flags on the command line
override the file. The exit code is 0 only if every in-run invariant holds.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .experiments import CASES, DEFAULT_WIDTHS, ExperimentConfig, run_benchmark, run_convergence
from .report import to_json, write_json

PROBE_DOMAINS = ("unit_square", "ellipse", "annulus", "half_disk", "square_minus_disk")
PROBE_WIDTHS = (0.5, 0.25, 0.125)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curlstokes", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the convergence study or a benchmark flow")
    s.add_argument("--config", type=Path, help="TOML file with any of the options below")
    s.add_argument("--case", choices=CASES)
    s.add_argument("--degree", type=int, help="finite element order k (1, 2 or 3)")
    s.add_argument("--geom-order", type=int, help="geometry order g (default k + 2)")
    s.add_argument("--h", type=float, nargs="+", help="mesh widths, strictly decreasing")
    s.add_argument("--curvature", choices=("analytic", "geometric"))
    s.add_argument("--cw", type=float, help="Nitsche penalty C_w (default 10 k^2)")
    s.add_argument("--out", type=Path, help="output directory")
    s.add_argument("--seq", action="store_true", default=None, help="run widths sequentially")

    q = sub.add_parser("probe", help="estimate the discrete Poincare or inf-sup constant")
    q.add_argument("--config", type=Path)
    q.add_argument("--what", choices=("poincare", "infsup"))
    q.add_argument("--domain", choices=PROBE_DOMAINS)
    q.add_argument("--degree", type=int)
    q.add_argument("--pressure-degree", type=int, help="pressure degree for inf-sup (default k)")
    q.add_argument("--h", type=float, nargs="+")
    q.add_argument("--out", type=Path)
    return p


def _merge(args: argparse.Namespace) -> dict:
    """Config file values overridden by explicit flags."""
    opts = {}
    if args.config is not None:
        with open(args.config, "rb") as fh:
            opts = {k.replace("-", "_"): v for k, v in tomllib.load(fh).items()}
    for k, v in vars(args).items():
        if k not in ("command", "config") and v is not None:
            opts[k] = v
    return opts


def _solve(opts: dict) -> int:
    if "case" not in opts:
        raise SystemExit("solve: --case is required (flag or config)")
    config = ExperimentConfig(
        case=opts["case"],
        degree=int(opts.get("degree", 3)),
        geom_order=opts.get("geom_order"),
        widths=tuple(opts.get("h", DEFAULT_WIDTHS[opts["case"]])),
        curvature=opts.get("curvature", "geometric"),
        C_w=opts.get("cw"),
        out=str(opts["out"]) if opts.get("out") else None,
        sequential=bool(opts.get("seq", False)),
    )
    if config.case == "manufactured_ellipse":
        report = run_convergence(config)
        for h, e in zip(config.widths, report.errors):
            print(f"h={h:<8g} " + " ".join(f"{n}={v:.3e}" for n, v in e.items()))
        for h, r in zip(config.widths[1:], report.rates):
            print(f"rate to h={h:<8g} " + " ".join(f"{n}={v:.2f}" for n, v in r.items()))
        passed = report.passed
    else:
        passed = True
        for h in config.widths:
            sub = config
            if len(config.widths) > 1 and config.out:
                sub = ExperimentConfig(**{**config.__dict__, "out": str(Path(config.out) / f"h{h:g}")})
            result = run_benchmark(sub, h)
            checks = {**result.run.checks, **result.properties}
            print(f"{config.case} h={h:g}: " + ", ".join(f"{k}={'ok' if c['pass'] else 'FAIL'}" for k, c in checks.items()))
            passed &= result.passed
    print("invariants:", "pass" if passed else "FAIL")
    return 0 if passed else 1


def _probe(opts: dict) -> int:
    from ..mesh import DomainSpec, generate_domain
    from ..solver import estimate_discrete_poincare, estimate_infsup_b

    what = opts.get("what", "poincare")
    domain = opts.get("domain", "unit_square")
    k = int(opts.get("degree", 1))
    widths = tuple(opts.get("h", PROBE_WIDTHS))
    rows = []
    for h in widths:
        mesh, _ = generate_domain(DomainSpec(domain, h))
        if what == "poincare":
            r = estimate_discrete_poincare(mesh, k)
            rows.append({"h": h, "C_h": r["C_h"], "lambda_min": r["lambda_min"]})
        else:
            kp = int(opts.get("pressure_degree", k))
            r = estimate_infsup_b(mesh, k, kp)
            rows.append({"h": h, "beta": r["beta"]})
    key = "C_h" if what == "poincare" else "beta"
    vals = np.array([r[key] for r in rows], dtype=float)
    summary = {"what": what, "domain": domain, "degree": k, "levels": rows}
    if np.all(np.isfinite(vals)) and len(vals) > 1:
        summary["variation"] = float((vals.max() - vals.min()) / vals.max())
    print(to_json(summary))
    if opts.get("out"):
        write_json(Path(opts["out"]) / f"probe_{what}.json", summary)
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    opts = _merge(args)
    return _solve(opts) if args.command == "solve" else _probe(opts)


if __name__ == "__main__":
    sys.exit(main())
