"""Command-line front end: estimate, critval, simulate.

Configuration precedence is CLI flags > config file > defaults. The config
file is a flat "key = value" text format using the long flag names (without
the leading dashes). Errors exit with a stable per-error code and print
"ERROR <name>: <message>" on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .dataset import load_csv
from .exceptions import MtebandError
from .inference import critical_value, solve_ell
from .kernels import kernel_by_name
from .pipeline import run_estimate
from .simulation import DESIGN_SIGMAS, SimDesign, run_coverage

_METHODS = ("analytic", "gumbel", "pointwise")


def _fmt(x: float) -> str:
    return "%.6g" % x


def _read_config(path: str) -> dict:
    cfg = {}
    with open(path) as f:
        for raw in f:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError("bad config line: %r" % raw.rstrip())
            key, value = (part.strip() for part in line.split("=", 1))
            cfg[key.replace("-", "_")] = value
    return cfg


def _merged(args: argparse.Namespace, defaults: dict) -> dict:
    """CLI flags beat the config file, which beats built-in defaults."""
    cfg = _read_config(args.config) if getattr(args, "config", None) else {}
    out = {}
    for key, default in defaults.items():
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            out[key] = cli_val
        elif key in cfg:
            raw = cfg[key]
            if isinstance(default, bool):
                out[key] = raw.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                out[key] = int(raw)
            elif isinstance(default, float):
                out[key] = float(raw)
            elif isinstance(default, (tuple, list)):
                out[key] = type(default)(
                    type(default[0])(tok) for tok in raw.replace(",", " ").split()
                )
            else:
                out[key] = raw
        else:
            out[key] = default
    return out


def _print_support(result, data, out=None):
    """Counts per arm per fitted-score decile; text analogue of a histogram."""
    out = sys.stdout if out is None else out
    fit = result.propensity
    print(
        "common support: [%s, %s]   kept %d   dropped treated %d, untreated %d"
        % (
            _fmt(fit.support[0]),
            _fmt(fit.support[1]),
            result.n,
            result.trim.dropped_treated,
            result.trim.dropped_untreated,
        ),
        file=out,
    )
    print("decile        treated  untreated", file=out)
    edges = np.linspace(0.0, 1.0, 11)
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (fit.fitted >= lo) & (fit.fitted < hi if hi < 1.0 else fit.fitted <= hi)
        nt = int((sel & (data.d == 1)).sum())
        nu = int((sel & (data.d == 0)).sum())
        print("[%.1f, %.1f)   %7d  %9d" % (lo, hi, nt, nu), file=out)


def _cmd_estimate(args) -> int:
    opts = _merged(
        args,
        dict(
            input=None,
            out=".",
            y="y",
            d="d",
            x="",
            z="",
            region=(0.15, 0.85),
            alpha=0.05,
            kernel="gaussian",
            bandwidth=None,
            grid=101,
            variance="s4",
            methods=",".join(_METHODS),
            seed=0,
        ),
    )
    if not opts["input"]:
        print("ERROR MissingInput: --input is required", file=sys.stderr)
        return 2
    x_cols = [c for c in opts["x"].split(",") if c]
    z_cols = [c for c in opts["z"].split(",") if c]
    if not set(x_cols) <= set(z_cols):
        print(
            "ERROR BadColumnMap: instrument columns must include every "
            "covariate column",
            file=sys.stderr,
        )
        return 2
    methods = tuple(m for m in opts["methods"].split(",") if m)
    data = load_csv(opts["input"], y=opts["y"], d=opts["d"], x=x_cols, z=z_cols)
    if data.dropped_rows:
        print("dropped %d incomplete row(s)" % data.dropped_rows)
    result = run_estimate(
        data,
        kernel=opts["kernel"],
        region=tuple(opts["region"]),
        grid_size=opts["grid"],
        alphas=(opts["alpha"],),
        methods=methods,
        bandwidth=opts["bandwidth"],
        variance=opts["variance"],
    )
    os.makedirs(opts["out"], exist_ok=True)
    _print_support(result, data)
    print(
        "h = %s   ell_n = %s" % (_fmt(result.h), _fmt(result.ell_n))
    )
    for (method, alpha), band in result.bands.items():
        stem = os.path.join(opts["out"], "band_%s" % method)
        band.write_csv(stem + ".csv")
        band.write_metadata(stem + ".json")
        print(
            "%s: crit = %s  ->  %s.csv" % (method, _fmt(band.crit.value), stem)
        )
    return 0


def _cmd_critval(args) -> int:
    opts = _merged(
        args,
        dict(
            bandwidth=None,
            region=(0.15, 0.85),
            alpha=0.05,
            kernel="gaussian",
            n=None,
            json=False,
        ),
    )
    if opts["bandwidth"] is None:
        print("ERROR MissingInput: --bandwidth is required", file=sys.stderr)
        return 2
    kernel = kernel_by_name(opts["kernel"])
    a0, b0 = opts["region"]
    ell = solve_ell(opts["bandwidth"], a0, b0, kernel.lam)
    values = {
        m: critical_value(m, opts["alpha"], ell).value for m in _METHODS
    }
    payload = {
        "kernel": kernel.family,
        "lambda": kernel.lam,
        "h": opts["bandwidth"],
        "region": [a0, b0],
        "alpha": opts["alpha"],
        "ell_n": ell,
        **{"crit_" + m: v for m, v in values.items()},
    }
    if opts["json"]:
        json.dump(payload, sys.stdout, indent=2)
        print()
    else:
        print("lambda  = %s" % _fmt(kernel.lam))
        print("ell_n   = %s" % _fmt(ell))
        for m in _METHODS:
            print("%-9s = %s" % (m, _fmt(values[m])))
    return 0


def _cmd_simulate(args) -> int:
    opts = _merged(
        args,
        dict(
            design="sigma1",
            n=3000,
            reps=1000,
            seed=0,
            out=".",
            region=(0.15, 0.85),
            grid=101,
            variance="s4",
            kernel="gaussian",
            threads=1,
            alpha="",
        ),
    )
    try:
        sigma = DESIGN_SIGMAS[opts["design"]]
    except KeyError:
        print(
            "ERROR BadDesign: --design must be one of %s"
            % sorted(DESIGN_SIGMAS),
            file=sys.stderr,
        )
        return 2
    alphas = (
        tuple(float(a) for a in opts["alpha"].split(",") if a)
        or (0.10, 0.05)
    )
    design = SimDesign(
        sigma=sigma,
        n=opts["n"],
        reps=opts["reps"],
        seed=opts["seed"],
        alpha_levels=alphas,
        region=tuple(opts["region"]),
        grid_size=opts["grid"],
    )
    report = run_coverage(
        design,
        variance=opts["variance"],
        kernel=opts["kernel"],
        n_jobs=opts["threads"],
    )
    os.makedirs(opts["out"], exist_ok=True)
    csv_path = os.path.join(opts["out"], "coverage_%s.csv" % opts["design"])
    txt_path = os.path.join(opts["out"], "coverage_%s.txt" % opts["design"])
    report.to_csv(csv_path)
    text = report.to_text()
    with open(txt_path, "w") as f:
        f.write(text + "\n")
    print(text)
    print("wrote %s and %s" % (csv_path, txt_path))
    return 0


def _add_common(p):
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--kernel", choices=("gaussian", "quartic"))
    p.add_argument("--region", nargs=2, type=float, metavar=("A0", "B0"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mteband",
        description="Marginal treatment effect estimation with uniform "
        "confidence bands",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("estimate", help="estimate an MTE band from a CSV")
    _add_common(pe)
    pe.add_argument("--input")
    pe.add_argument("--out")
    pe.add_argument("--y")
    pe.add_argument("--d")
    pe.add_argument("--x", help="comma-separated covariate columns")
    pe.add_argument("--z", help="comma-separated instrument columns")
    pe.add_argument("--alpha", type=float)
    pe.add_argument("--bandwidth", type=float)
    pe.add_argument("--grid", type=int)
    pe.add_argument("--variance", choices=("s4", "s5"))
    pe.add_argument("--methods", help="comma-separated subset of %s" % (_METHODS,))
    pe.set_defaults(func=_cmd_estimate)

    pc = sub.add_parser(
        "critval", help="critical values from published metadata"
    )
    _add_common(pc)
    pc.add_argument("--bandwidth", type=float)
    pc.add_argument("--alpha", type=float)
    pc.add_argument("--n", type=int)
    pc.add_argument("--json", action="store_const", const=True)
    pc.set_defaults(func=_cmd_critval)

    ps = sub.add_parser("simulate", help="Monte Carlo coverage study")
    _add_common(ps)
    ps.add_argument("--design", choices=sorted(DESIGN_SIGMAS))
    ps.add_argument("--n", type=int)
    ps.add_argument("--reps", type=int)
    ps.add_argument("--seed", type=int)
    ps.add_argument("--out")
    ps.add_argument("--grid", type=int)
    ps.add_argument("--variance", choices=("s4", "s5"))
    ps.add_argument("--threads", type=int)
    ps.add_argument("--alpha", help="comma-separated miscoverage levels")
    ps.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MtebandError as err:
        print("ERROR %s: %s" % (err.name, err), file=sys.stderr)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
