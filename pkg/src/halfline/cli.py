"""Command-line front end.

Every subcommand resolves its settings from built-in defaults, then an
optional JSON config file, then explicit flags (flags win).  The resolved
settings and the library version are embedded in every output file.

Exit codes: 0 success, 1 a verification check failed, 2 usage or
configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .absorption import evolve_absorbed, general_absorbed, parse_potential
from .bessel import bessel_i, bessel_k
from .families import bump, gaussian
from .kernel import KernelParams, SectorPoint, apply_semigroup
from .reduce import OperatorSpec, classify, reduction_plan
from .resolvent import ResolventQuery, apply_resolvent
from .spaces import Grid, make_geometric_grid, make_grid, sample, write_csv
from .verify import SUITES, run_suite

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

SUBCOMMANDS = ("bessel", "kernel", "resolvent", "classify", "evolve", "verify")


class UsageError(ValueError):
    pass


def _floats(text: str) -> list:
    return [float(s) for s in str(text).split(",") if s.strip()]


def _grid_arg(text) -> list:
    parts = str(text).split(",")
    if len(parts) != 4:
        raise ValueError("grid must be xmin,xmax,panels,order")
    return [float(parts[0]), float(parts[1]), int(parts[2]), int(parts[3])]


# (flag, type, default, help) per subcommand; shared options apply to all
SHARED = {
    "grid": (_grid_arg, None, "xmin,xmax,panels,order of a geometric grid"),
    "out": (str, None, "output path (default: stdout)"),
    "tol": (float, None, "locality tolerance of the integral operators"),
    "seed": (int, 0, "seed for random test inputs"),
    "jobs": (int, 1, "worker processes for verify"),
}
OPTIONS = {
    "bessel": {"nu": (float, None, "order nu >= 0"),
               "x": (_floats, None, "comma-separated arguments"),
               "kind": (str, "i", "i or k")},
    "kernel": {"kappa": (float, 0.0, "kappa < 1"),
               "t": (float, None, "time modulus |z|"),
               "phase": (float, 0.0, "arg z, |arg z| < pi/2"),
               "f": (str, "gaussian:2,0.5", "initial datum gaussian:c,w or bump:c,r"),
               "m": (float, 1.0, "weight exponent of X_m")},
    "resolvent": {"kappa": (float, 0.0, "kappa < 1"),
                  "lam": (float, None, "spectral parameter lambda > 0"),
                  "f": (str, "gaussian:2,0.5", "right-hand side gaussian:c,w or bump:c,r"),
                  "m": (float, 1.0, "weight exponent of X_m")},
    "classify": {"alpha": (float, None, "alpha != 2"),
                 "a": (float, None, "first-order coefficient"),
                 "b": (float, None, "potential coefficient"),
                 "n": (float, None, "weight exponent of X_n"),
                 "branch": (int, None, "root branch +1 or -1 (default by alpha)")},
    "evolve": {"kappa": (float, 0.0, "kappa < 1 (ignored when alpha is given)"),
               "alpha": (float, None, "evolve A_alpha(a,b) instead of G_kappa"),
               "a": (float, None, "first-order coefficient"),
               "b": (float, None, "potential coefficient"),
               "t": (float, None, "time t > 0"),
               "omega": (str, "zero", "zero, const:c, linear:c or power:c,p"),
               "steps": (int, 16, "Strang steps"),
               "f": (str, "gaussian:2,0.5", "initial datum gaussian:c,w or bump:c,r"),
               "m": (float, 1.0, "weight exponent (n when alpha is given)")},
    "verify": {"suite": (str, "default", "suite name")},
}
REQUIRED = {"bessel": ("nu", "x"), "kernel": ("t",), "resolvent": ("lam",),
            "classify": ("alpha", "a", "b", "n"), "evolve": ("t",), "verify": ()}


@dataclass
class RunConfig:
    subcommand: str
    parameters: dict
    grid: Optional[list] = None
    output_path: Optional[str] = None
    seed: int = 0
    tol: Optional[float] = None
    jobs: int = 1
    overridden: list = field(default_factory=list)

    def resolved(self) -> dict:
        out = {"subcommand": self.subcommand, "parameters": self.parameters,
               "grid": self.grid, "seed": self.seed, "tol": self.tol}
        if self.overridden:
            out["overridden_by_flags"] = self.overridden
        return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="halfline", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=argparse.SUPPRESS, help="JSON file of settings")
        for key, (_, _, hlp) in {**SHARED, **OPTIONS[name]}.items():
            # values are kept as strings here and converted after merging with the file
            sp.add_argument(f"--{key}", default=argparse.SUPPRESS, help=hlp)
    return parser


def _convert(key: str, conv, value):
    if value is None:
        return None
    if conv is _floats and isinstance(value, list):
        value = ",".join(str(v) for v in value)
    if conv is _grid_arg and isinstance(value, list):
        value = ",".join(str(v) for v in value)
    if conv in (float, int) and isinstance(value, bool):
        raise UsageError(f"--{key}: expected a number, got {value!r}")
    try:
        if conv is int and isinstance(value, float) and not value.is_integer():
            raise ValueError
        return conv(value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"--{key}: cannot interpret {value!r} ({exc or 'bad value'})") from None


def parse_config(argv) -> RunConfig:
    """Resolve defaults, config file and flags into a :class:`RunConfig`."""
    ns = vars(build_parser().parse_args(argv))
    name = ns.pop("subcommand")
    table = {**SHARED, **OPTIONS[name]}
    file_vals = {}
    if "config" in ns:
        path = ns.pop("config")
        try:
            with open(path) as fh:
                file_vals = json.load(fh)
        except OSError:
            raise
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {path}: {exc}") from None
        if not isinstance(file_vals, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(file_vals) - set(table))
        if unknown:
            raise UsageError(f"unknown config key(s) for {name}: {', '.join(unknown)}")
    merged, overridden = {}, []
    for key, (conv, default, _) in table.items():
        if key in ns:
            raw = ns[key]
            if key in file_vals and _convert(key, conv, file_vals[key]) != _convert(key, conv, raw):
                overridden.append(key)
        else:
            raw = file_vals.get(key, default)
        merged[key] = _convert(key, conv, raw)
    missing = [k for k in REQUIRED[name] if merged[k] is None]
    if name == "evolve" and merged["alpha"] is not None:
        missing += [k for k in ("a", "b") if merged[k] is None]
    if missing:
        raise UsageError(f"missing required parameter(s): {', '.join('--' + k for k in missing)}")
    params = {k: merged[k] for k in OPTIONS[name]}
    return RunConfig(name, params, merged["grid"], merged["out"], merged["seed"], merged["tol"],
                     merged["jobs"], overridden)


# -- subcommands ---------------------------------------------------------------


def _grid(cfg: RunConfig) -> Grid:
    if cfg.grid is None:
        return make_grid()
    return make_geometric_grid(*cfg.grid)


def _datum(expr: str):
    kind, _, arg = expr.partition(":")
    try:
        c, w = (float(s) for s in arg.split(","))
    except ValueError:
        raise UsageError(f"bad datum {expr!r}; use gaussian:c,w or bump:c,r") from None
    if kind == "gaussian":
        return lambda x: gaussian(x, c, w)
    if kind == "bump":
        return lambda x: bump(x, c, w)
    raise UsageError(f"bad datum {expr!r}; use gaussian:c,w or bump:c,r")


def _tol(cfg: RunConfig) -> dict:
    return {} if cfg.tol is None else {"tol": cfg.tol}


def _metadata(cfg: RunConfig) -> dict:
    return {"version": __version__, "config": json.dumps(cfg.resolved(), sort_keys=True)}


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output_path is None:
        sys.stdout.write(text)
    else:
        with open(cfg.output_path, "w") as fh:
            fh.write(text)


def _emit_json(cfg: RunConfig, payload: dict) -> None:
    payload = dict(payload)
    payload.setdefault("metadata", {})
    payload["metadata"] = {**payload["metadata"], "version": __version__, "config": cfg.resolved()}
    _emit(cfg, json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _emit_csv(cfg: RunConfig, f) -> None:
    if cfg.output_path is None:
        write_csv(f, sys.stdout, _metadata(cfg))
    else:
        write_csv(f, cfg.output_path, _metadata(cfg))


def run_bessel(cfg: RunConfig) -> int:
    p = cfg.parameters
    fn = {"i": bessel_i, "k": bessel_k}.get(p["kind"])
    if fn is None:
        raise UsageError("--kind must be i or k")
    x = np.asarray(p["x"], dtype=float)
    v = fn(p["nu"], x)
    rows = [{"x": float(xi), "log_value": float(li), "value": float(vi)}
            for xi, li, vi in zip(x, np.real(v.log()), np.real(v.value()))]
    _emit_json(cfg, {"kind": p["kind"], "nu": p["nu"], "values": rows})
    return EXIT_OK


def run_kernel(cfg: RunConfig) -> int:
    p = cfg.parameters
    kp = KernelParams(p["kappa"])
    f = sample(_datum(p["f"]), _grid(cfg), p["m"])
    _emit_csv(cfg, apply_semigroup(kp, SectorPoint(p["t"], p["phase"]), f, **_tol(cfg)))
    return EXIT_OK


def run_resolvent(cfg: RunConfig) -> int:
    p = cfg.parameters
    f = sample(_datum(p["f"]), _grid(cfg), p["m"])
    _emit_csv(cfg, apply_resolvent(ResolventQuery(KernelParams(p["kappa"]), p["lam"], f), **_tol(cfg)))
    return EXIT_OK


def run_classify(cfg: RunConfig) -> int:
    p = cfg.parameters
    spec = OperatorSpec(p["alpha"], p["a"], p["b"])
    label = classify(spec, p["n"])
    payload = {"case": label}
    if label != "out_of_range":
        payload["plan"] = reduction_plan(spec, p["branch"], p["n"]).to_dict()
    _emit_json(cfg, payload)
    return EXIT_OK


def run_evolve(cfg: RunConfig) -> int:
    p = cfg.parameters
    omega = parse_potential(p["omega"])
    f = sample(_datum(p["f"]), _grid(cfg), p["m"])
    if p["alpha"] is None:
        u = evolve_absorbed(KernelParams(p["kappa"]), omega, p["t"], p["steps"], f, **_tol(cfg))
    else:
        spec = OperatorSpec(p["alpha"], p["a"], p["b"])
        u = general_absorbed(spec, p["m"], omega, p["t"], f, p["steps"], **_tol(cfg))
    _emit_csv(cfg, u)
    return EXIT_OK


def run_verify(cfg: RunConfig) -> int:
    name = cfg.parameters["suite"]
    if name not in SUITES:
        raise UsageError(f"unknown suite {name!r}; available: {', '.join(sorted(SUITES))}")
    rep = run_suite(SUITES[name](), seed=cfg.seed, jobs=cfg.jobs,
                    metadata={"suite": name, "config": cfg.resolved()})
    _emit(cfg, rep.to_json() + "\n")
    return EXIT_OK if rep.passed else EXIT_CHECK


DISPATCH = {"bessel": run_bessel, "kernel": run_kernel, "resolvent": run_resolvent,
            "classify": run_classify, "evolve": run_evolve, "verify": run_verify}


def dispatch(cfg: RunConfig) -> int:
    return DISPATCH[cfg.subcommand](cfg)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        return dispatch(parse_config(argv))
    except BrokenPipeError:
        # reader went away (e.g. piped into head); not an error of ours
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except OSError as exc:
        print(f"halfline: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError, KeyError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        print(f"halfline: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
