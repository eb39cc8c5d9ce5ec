"""Command-line front end.

Every subcommand resolves its options into a plain config dictionary,
writes its result, and (when writing to a file) stores the config next to
it as ``<out>.config.json``.  ``zenodecay replay <config>`` reruns such a
config and reproduces the output byte for byte.

Exit status is 0 on success, 1 when a computation or validation fails and 2
for invalid usage or parameters.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, dynamics, oracle, phasemap, spectral
from .errors import ParameterError, ZenoError
from .io import atomic_write, dumps, format_csv, metadata_line
from .model import PARAMETER_FIELDS, LorentzianModel, lorentzian_to_spectral

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SUM_RULE_TOL = 1e-6

DEFAULT_OUT = {
    "evolve": "trajectory.csv",
    "phase-diagram": "phase_diagram.csv",
    "formfactor": "formfactor.csv",
}


class UsageError(Exception):
    pass


def _model_parser():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("model parameters (gamma units)")
    g.add_argument("--gamma", type=float, default=1.0, help="coupling strength (default 1)")
    g.add_argument("--delta", type=float, default=100.0, help="form-factor half-width (default 100)")
    where = g.add_mutually_exclusive_group()
    where.add_argument("--detuning", type=float, help="omega0 - k0 (default 0)")
    where.add_argument("--omega0", type=float, help="atomic transition energy")
    g.add_argument("--k0", type=float, help="form-factor centre (default 100*delta)")
    g.add_argument("--eta", type=float, default=0.0, help="detector coupling (default 0)")
    g.add_argument("--eps-inf", type=float, default=0.0,
                   help="asymptotic error probability in [0, 1] (default 0)")
    o = p.add_argument_group("output")
    o.add_argument("--out", help="output file")
    o.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zenodecay",
        description="Decay of a two-level atom whose emitted photon is watched by a detector.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _model_parser()

    p = sub.add_parser("rate", parents=[common], help="free and measured decay rates")
    p.add_argument("--quadrature", action="store_true",
                   help="evaluate the measured rate by quadrature instead of the closed form")

    p = sub.add_parser("evolve", parents=[common], help="s(t), eps(t), r(t) on a time grid")
    p.add_argument("--t-max", type=float, help="final time (default 20/Gamma_0)")
    p.add_argument("--n", type=int, default=400, help="number of samples (default 400)")
    p.add_argument("--log-s", action="store_true", help="add a ln(s)/t column")
    p.add_argument("--log-grid", action="store_true", help="log-spaced times after t = 0")

    p = sub.add_parser("phase-diagram", parents=[common], help="Zeno/anti-Zeno map over (|detuning|, eta)")
    p.add_argument("--detuning-max", type=float, help="largest |detuning| (default 3*delta)")
    p.add_argument("--eta-max", type=float, help="largest eta (default 3*delta)")
    p.add_argument("--grid", type=int, default=200, help="points per axis (default 200)")

    p = sub.add_parser("formfactor", parents=[common], help="renormalized form factor |g_mu|^2")
    p.add_argument("--mu-min", type=float, help="first mode energy (default k0 - 5*(delta + pi*eta))")
    p.add_argument("--mu-max", type=float, help="last mode energy (default k0 + 5*(delta + pi*eta))")
    p.add_argument("--n-mu", type=int, default=201, help="number of energies (default 201)")

    p = sub.add_parser("validate", parents=[common], help="compare with the discretized-continuum oracle")
    p.add_argument("--n-modes", type=int, default=oracle.DEFAULT_MODES,
                   help=f"photon modes (default {oracle.DEFAULT_MODES})")
    p.add_argument("--t-max", type=float, help="final time (default 10/Gamma_0)")
    p.add_argument("--p-convention", choices=dynamics.P_CONVENTIONS, default="detected",
                   help=argparse.SUPPRESS)

    p = sub.add_parser("replay", help="rerun a stored <out>.config.json")
    p.add_argument("config", help="config file written by an earlier run")
    p.add_argument("--out", help="write here instead of the stored path")
    return parser


def _resolve(args):
    """Turn parsed arguments into a JSON-ready config."""
    cfg = {"command": args.command, "format": args.format}
    if args.omega0 is None and args.detuning is None:
        args.detuning = 0.0
    k0 = args.k0 if args.k0 is not None else 100.0 * args.delta
    omega0 = args.omega0 if args.omega0 is not None else k0 + args.detuning
    m = LorentzianModel(gamma=args.gamma, delta=args.delta, k0=k0, omega0=omega0,
                        eta=args.eta, eps_inf=args.eps_inf)
    cfg["model"] = m.to_dict()
    cfg["out"] = args.out if args.out is not None else DEFAULT_OUT.get(args.command)
    if args.command == "rate":
        cfg["quadrature"] = args.quadrature
    elif args.command == "evolve":
        cfg["t_max"] = args.t_max if args.t_max is not None else 20.0 / m.free_rate
        cfg.update(n=args.n, log_s=args.log_s, log_grid=args.log_grid)
    elif args.command == "phase-diagram":
        cfg["detuning_max"] = args.detuning_max if args.detuning_max is not None else 3.0 * m.delta
        cfg["eta_max"] = args.eta_max if args.eta_max is not None else 3.0 * m.delta
        cfg["grid"] = args.grid
    elif args.command == "formfactor":
        half = 5.0 * m.delta_tilde
        cfg["mu_min"] = args.mu_min if args.mu_min is not None else m.k0 - half
        cfg["mu_max"] = args.mu_max if args.mu_max is not None else m.k0 + half
        cfg["n_mu"] = args.n_mu
    elif args.command == "validate":
        cfg["t_max"] = args.t_max if args.t_max is not None else 10.0 / m.free_rate
        cfg.update(n_modes=args.n_modes, p_convention=args.p_convention)
    return cfg


def _meta(cfg, extra=None):
    params = {name: cfg["model"][name] for name in PARAMETER_FIELDS}
    for key in ("t_max", "n", "detuning_max", "eta_max", "grid", "mu_min", "mu_max", "n_mu",
                "n_modes"):
        if key in cfg:
            params[key] = cfg[key]
    params.update(extra or {})
    return metadata_line(cfg["command"], params)


def _emit(cfg, text, stdout):
    out = cfg.get("out")
    if out is None or out == "-":
        stdout.write(text)
        return
    atomic_write(out, text)
    atomic_write(out + ".config.json", dumps(cfg))


def _sibling(path, tag, fmt):
    stem, _ = os.path.splitext(path)
    return f"{stem}.{tag}.{fmt}"


def run_rate(cfg, m, stdout):
    result = (spectral.measured_rate_quadrature(m) if cfg["quadrature"]
              else spectral.measured_rate_lorentzian(m))
    if cfg["format"] == "json":
        text = dumps({"model": cfg["model"], **result.to_dict()})
    else:
        text = format_csv(("free_rate", "measured_rate", "ratio", "classification"),
                          [(result.free_rate, result.measured_rate, result.ratio,
                            result.classification)], meta=_meta(cfg))
    if cfg.get("out") not in (None, "-"):
        _emit(cfg, text, stdout)
    if cfg["format"] == "json":
        stdout.write(text)
        return EXIT_OK
    stdout.write(f"free_rate      {result.free_rate!r}\n"
                 f"measured_rate  {result.measured_rate!r}\n"
                 f"ratio          {result.ratio!r}\n"
                 f"classification {result.classification}\n")
    return EXIT_OK


def run_evolve(cfg, m, stdout):
    if cfg["n"] < 2:
        raise ParameterError(f"--n must be >= 2 (got {cfg['n']})")
    if not cfg["t_max"] > 0:
        raise ParameterError(f"--t-max must be > 0 (got {cfg['t_max']})")
    traj = dynamics.evolve(m, cfg["t_max"], cfg["n"], log_grid=cfg["log_grid"])
    if cfg["format"] == "json":
        text = dumps({"model": cfg["model"], **traj.to_dict(log_s=cfg["log_s"])})
    else:
        text = traj.to_csv(log_s=cfg["log_s"], meta=_meta(cfg))
    _emit(cfg, text, stdout)
    return EXIT_OK


def run_phase_diagram(cfg, m, stdout):
    D = m.delta
    if not (cfg["detuning_max"] > 0 and cfg["eta_max"] > 0):
        raise ParameterError("--detuning-max and --eta-max must be > 0")
    n = cfg["grid"]
    pmap = phasemap.sweep((0.0, cfg["detuning_max"] / D), (0.0, cfg["eta_max"] / D), (n, n),
                          eps_inf=m.eps_inf)
    curves = {
        "boundary": phasemap.boundary_curve(cfg["detuning_max"] / D, n),
        "max_effect": phasemap.max_effect_curve(cfg["detuning_max"] / D, n),
    }
    fmt = cfg["format"]
    if fmt == "json":
        text = pmap.to_json()
    else:
        text = pmap.to_csv(meta=_meta(cfg))
    out = cfg["out"]
    for tag, (x, y) in curves.items():
        if fmt == "json":
            body = dumps({"detuning_over_delta": x.tolist(), "eta_over_delta": y.tolist()})
        else:
            body = format_csv(("detuning_over_delta", "eta_over_delta"), zip(x, y),
                              meta=_meta(cfg, {"curve": tag}))
        if out in (None, "-"):
            continue
        atomic_write(_sibling(out, tag, fmt), body)
    _emit(cfg, text, stdout)
    return EXIT_OK


def run_formfactor(cfg, m, stdout):
    if cfg["n_mu"] < 2 or not cfg["mu_max"] > cfg["mu_min"]:
        raise ParameterError("need --n-mu >= 2 and --mu-max > --mu-min")
    s = lorentzian_to_spectral(m)
    curve = spectral.form_factor_curve(s, np.linspace(cfg["mu_min"], cfg["mu_max"], cfg["n_mu"]))
    lhs, rhs, rel_err = spectral.sum_rule_check(s)
    if cfg["format"] == "json":
        text = dumps({"model": cfg["model"], "mu": curve.mu.tolist(), "g2": curve.g2.tolist(),
                      "sum_rule": {"lhs": float(lhs), "rhs": float(rhs),
                                   "rel_err": float(rel_err)}})
    else:
        trailer = f"# sum_rule lhs={float(lhs)!r} rhs={float(rhs)!r} rel_err={float(rel_err)!r}"
        text = curve.to_csv(meta=_meta(cfg), trailer=trailer)
    _emit(cfg, text, stdout)
    if rel_err >= SUM_RULE_TOL:
        print(f"zenodecay: sum rule violated (rel_err {rel_err:.2e})", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def run_validate(cfg, m, stdout):
    report = oracle.compare(m, cfg["t_max"], cfg["n_modes"], cfg["p_convention"])
    text = report.to_json()
    if cfg.get("out") not in (None, "-"):
        _emit(cfg, text, stdout)
    stdout.write(text)
    return EXIT_OK if report.passed else EXIT_FAIL


RUNNERS = {
    "rate": run_rate,
    "evolve": run_evolve,
    "phase-diagram": run_phase_diagram,
    "formfactor": run_formfactor,
    "validate": run_validate,
}


def execute(cfg, stdout=None):
    """Run a resolved config; returns the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    m = LorentzianModel.from_dict(cfg["model"])
    return RUNNERS[cfg["command"]](cfg, m, stdout)


def _load_config(path, out):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if cfg.get("command") not in RUNNERS or "model" not in cfg:
        raise UsageError(f"{path} is not a zenodecay run config")
    missing = [f for f in PARAMETER_FIELDS if f not in cfg["model"]]
    if missing:
        raise UsageError(f"{path} lacks model field(s): {', '.join(missing)}")
    if out is not None:
        cfg["out"] = out
    return cfg


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        cfg = _load_config(args.config, args.out) if args.command == "replay" else _resolve(args)
        return execute(cfg)
    except (ParameterError, UsageError) as exc:
        print(f"zenodecay: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ZenoError as exc:
        print(f"zenodecay: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
