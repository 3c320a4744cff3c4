"""Command-line front end.

Configuration is resolved as: command defaults < preset < JSON config file <
command-line flags. Unknown keys are rejected. The fully resolved configuration
is written as ``config.json`` next to every output.

Exit codes: 0 success, 1 configuration error, 2 solver non-convergence,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import blowup as bu
from . import continuation as cont
from . import evolution as ev
from . import io
from .errors import ConfigurationError, DomainError, NonConvergenceError, NumericalFailure
from .groundstate import (
    GroundStateProblem,
    exact_solution,
    pokhozhaev_residuals,
    pokhozhaev_scales,
    solve,
)
from .presets import PRESETS, get_preset
from .spectral import Field, make_grid, resample

log = logging.getLogger("binls")

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGENCE, EXIT_NUMERICAL = 0, 1, 2, 3

OUTPUT_ENV = "B4NLS_OUTPUT_DIR"

# key -> (type, default); None means "required" unless noted
SCHEMAS = {
    "ground": {
        "alpha": (float, None),
        "a": (float, None),
        "b": (float, None),
        "L": (float, 20.0),
        "N": (int, 1024),
        "initial_amplitude": (float, 1.5),
        "newton_tol": (float, 1e-10),
        "relaxation": (float, None),
        "max_newton_iters": (int, 100),
    },
    "exact": {
        "alpha": (float, None),
        "a": (float, None),
        "L": (float, 20.0),
        "N": (int, 1024),
    },
    "evolve": {
        "alpha": (float, None),
        "a": (float, 0.0),
        "b": (float, None),
        "kind": (str, "AQ"),
        "A": (float, 1.0),
        "L": (float, 10.0),
        "N": (int, 1024),
        "t0": (float, 0.0),
        "t1": (float, 1.0),
        "n_steps": (int, 1000),
        "monitor_stride": (int, 10),
        "energy_abort_rel": (float, 1e-3),
        "linf_abort": (float, 1e6),
        "nonlinearity": (bool, True),
        "snapshot_stride": (int, None),
        "initial_snapshot": (str, None),
        "experiment": (bool, False),
        "amplitude_factor": (float, 3.0),
        "disperse_ratio": (float, 0.6),
    },
    "sweep": {
        # a or b may carry the swept range itself, e.g. --b 1:0.1:4
        "alpha": (float, None),
        "a": (str, None),
        "b": (str, None),
        "swept": (str, "b"),
        "values": (str, "default"),
        "L": (float, 10.0),
        "N": (int, 1024),
    },
    "blowup": {
        "alpha": (float, None),
        "a": (float, 0.0),
        "b": (float, None),
        "kind": (str, "gaussian"),
        "A": (float, 1.7),
        "L": (float, 8.0),
        "N": (int, 8192),
        "h0": (float, 1e-5),
        "t_max": (float, 1.0),
        "h_min": (float, 1e-10),
        "growth": (float, None),
        "max_steps": (int, 2_000_000),
        "monitor_stride": (int, 10),
        "energy_abort_rel": (float, 1e-3),
        "window_factor": (float, 2.0),
        "q0_L": (float, 10.0),
        "q0_N": (int, 2048),
    },
}

# keys that may stay unset (b is only needed by ground-state based initial data)
_OPTIONAL = {
    "ground": {"relaxation"},
    "exact": set(),
    "evolve": {"b", "snapshot_stride", "initial_snapshot"},
    "sweep": {"a", "b"},
    "blowup": {"b", "growth"},
}


def _coerce(key, typ, value):
    if value is None:
        return None
    try:
        if typ is bool:
            if isinstance(value, str):
                if value.lower() in ("1", "true", "yes", "on"):
                    return True
                if value.lower() in ("0", "false", "no", "off"):
                    return False
                raise ValueError(value)
            return bool(value)
        if typ is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if typ is float:
            v = float(value)
            if not math.isfinite(v):
                raise ValueError(value)
            return v
        return str(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{key}: cannot interpret {value!r} as {typ.__name__}") from None


def resolve_config(command: str, preset: str | None = None, file_cfg: dict | None = None, flags: dict | None = None) -> dict:
    """Merge defaults, preset, config file and flags; validate keys and types."""
    schema = SCHEMAS[command]
    cfg = {k: d for k, (_, d) in schema.items()}
    layers = []
    if preset:
        layers.append(("preset", get_preset(preset, command)))
    if file_cfg:
        file_cfg = dict(file_cfg)
        file_preset = file_cfg.pop("preset", None)
        if file_preset and not preset:
            layers.insert(0, ("preset", get_preset(file_preset, command)))
            preset = file_preset
        layers.append(("config file", file_cfg))
    if flags:
        layers.append(("flags", flags))
    for origin, layer in layers:
        unknown = sorted(set(layer) - set(schema))
        if unknown:
            raise ConfigurationError(f"unknown {command} key(s) in {origin}: {', '.join(unknown)}")
        for k, v in layer.items():
            cfg[k] = _coerce(k, schema[k][0], v)
    missing = [k for k, v in cfg.items() if v is None and k not in _OPTIONAL[command]]
    if missing:
        raise ConfigurationError(f"missing required {command} parameter(s): {', '.join(missing)}")
    if command == "sweep":
        _normalise_sweep(cfg)
    if preset:
        cfg["preset"] = preset
    make_grid(cfg["L"], cfg["N"])  # validates the grid before any work starts
    return cfg


def _is_range(text):
    return isinstance(text, str) and (":" in text or "," in text)


def _normalise_sweep(cfg):
    ranged = [k for k in ("a", "b") if _is_range(cfg[k])]
    if len(ranged) > 1:
        raise ConfigurationError("only one of a, b can be swept")
    if ranged:
        k = ranged[0]
        cfg["swept"], cfg["values"], cfg[k] = k, cfg[k], None
    for k in ("a", "b"):
        cfg[k] = _coerce(k, float, cfg[k])
    if cfg["swept"] not in ("a", "b"):
        raise ConfigurationError("swept must be 'a' or 'b'")


def output_dir(flag: str | None, name: str) -> Path:
    root = Path(flag) if flag else Path(os.environ.get(OUTPUT_ENV, "b4nls-output"))
    out = root / name if not flag else root
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- commands -------------------------------------------------------------------


def _ground_problem(cfg, grid):
    return GroundStateProblem(
        cfg["alpha"],
        cfg["a"],
        cfg["b"],
        grid,
        initial_amplitude=cfg.get("initial_amplitude", 1.5),
        newton_tol=cfg.get("newton_tol", 1e-10),
        relaxation=cfg.get("relaxation"),
        max_newton_iters=cfg.get("max_newton_iters", 100),
    )


def _ground_summary(g):
    r = pokhozhaev_residuals(g)
    return {
        **{k: float(v) for k, v in g.scalars.items()},
        "residual": g.residual_sup,
        "iterations": g.iterations,
        "pokhozhaev": dict(zip(r._fields, map(float, r))),
        "pokhozhaev_scales": dict(zip(r._fields, map(float, pokhozhaev_scales(g)))),
    }


def cmd_ground(cfg, out: Path) -> dict:
    grid = make_grid(cfg["L"], cfg["N"])
    g = solve(_ground_problem(cfg, grid))
    io.write_snapshot(out / "profile.b4nls", g.profile, a=g.a, b=g.b, alpha=g.alpha)
    summary = _ground_summary(g)
    io.write_json(out / "scalars.json", summary)
    return summary


def cmd_exact(cfg, out: Path) -> dict:
    grid = make_grid(cfg["L"], cfg["N"])
    g = exact_solution(cfg["alpha"], cfg["a"], grid)
    io.write_snapshot(out / "exact.b4nls", g.profile, a=g.a, b=g.b, alpha=g.alpha)
    summary = {"b": g.b, **_ground_summary(g)}
    io.write_json(out / "scalars.json", summary)
    return summary


def _initial(cfg, grid):
    if cfg.get("initial_snapshot"):
        snap = io.read_snapshot(cfg["initial_snapshot"])
        return resample(snap.field, grid) * cfg["A"], None
    gs = None
    if cfg["kind"] == "AQ":
        if cfg.get("b") is None:
            raise ConfigurationError("kind 'AQ' needs b")
        gs = solve(GroundStateProblem(cfg["alpha"], cfg["a"], cfg["b"], grid))
    if cfg["kind"] == "zero":
        return Field(grid, np.zeros(grid.N)), gs
    return ev.initial_data(cfg["kind"], cfg["A"], grid, gs), gs


def cmd_evolve(cfg, out: Path) -> dict:
    grid = make_grid(cfg["L"], cfg["N"])
    u0, gs = _initial(cfg, grid)
    if cfg["experiment"]:
        rule = ev.VerdictRule(amplitude_factor=cfg["amplitude_factor"], disperse_ratio=cfg["disperse_ratio"])
        res = ev.perturbation_experiment(u0, cfg["alpha"], cfg["a"], (cfg["t0"], cfg["t1"]), cfg["n_steps"], rule, cfg["monitor_stride"])
        summary = {
            "verdict": res.verdict,
            "initial_linf": res.initial_linf,
            "final_linf": res.final_linf,
            "max_energy_drift": res.max_energy_drift,
            "failure": res.failure,
        }
        trace = res.trace
    else:
        ecfg = ev.EvolutionConfig(
            cfg["alpha"],
            cfg["a"],
            grid,
            (cfg["t0"], cfg["t1"]),
            cfg["n_steps"],
            monitor_stride=cfg["monitor_stride"],
            energy_abort_rel=cfg["energy_abort_rel"],
            linf_abort=cfg["linf_abort"],
            nonlinearity_enabled=cfg["nonlinearity"],
            snapshot_stride=cfg["snapshot_stride"],
        )
        trace = ev.evolve(u0, ecfg)
        summary = {"termination": trace.termination}
    b = cfg.get("b") or 0.0
    if trace is not None:
        io.write_trace_csv(trace, out / "trace.csv")
        io.write_snapshot(out / "final.b4nls", trace.final_state, a=cfg["a"], b=b, alpha=cfg["alpha"], t=trace.t_final)
        for i, (t, f) in enumerate(trace.snapshots):
            io.write_snapshot(out / f"snapshot_{i:05d}.b4nls", f, a=cfg["a"], b=b, alpha=cfg["alpha"], t=t)
        last = trace.records[-1]
        summary.update(
            t_final=last.t,
            termination=trace.termination,
            max_energy_drift=float(trace.column("energy_drift_rel").max()),
            final_linf=last.linf,
        )
        if gs is not None and cfg["A"] == 1.0 and cfg["nonlinearity"]:
            exact = np.exp(1j * cfg["b"] * (last.t - cfg["t0"])) * np.asarray(gs.profile.values)
            summary["soliton_error_sup"] = float(np.max(np.abs(trace.final_state.values - exact)))
    io.write_json(out / "summary.json", summary)
    return summary


def _sweep_values(cfg):
    text = cfg["values"]
    if cfg["swept"] == "b":
        if cfg.get("a") is None:
            raise ConfigurationError("b sweeps need a")
        vals = cont.default_b_values(cfg["a"]) if text == "default" else cont.parse_range(text)
        keep = vals > cfg["a"] ** 2 if cfg["a"] > 0 else vals > 0
        if not keep.all():
            log.warning("dropping b values <= a^2 = %g: %s", cfg["a"] ** 2, vals[~keep].tolist())
            vals = vals[keep]
        if vals.size == 0:
            raise ConfigurationError("empty sweep: every b violates b > a^2")
        return vals
    if cfg["swept"] == "a":
        if cfg.get("b") is None:
            raise ConfigurationError("a sweeps need b")
        if text == "default":
            return np.linspace(-2.0, 0.95 * math.sqrt(cfg["b"]), 31)
        return np.sort(cont.parse_range(text))
    raise ConfigurationError("swept must be 'a' or 'b'")


def cmd_sweep(cfg, out: Path) -> dict:
    grid = make_grid(cfg["L"], cfg["N"])
    vals = _sweep_values(cfg)
    if cfg["swept"] == "b":
        base = GroundStateProblem(cfg["alpha"], cfg["a"], float(vals[-1]), grid)
        curve = cont.sweep_b(base, vals)
    else:
        base = GroundStateProblem(cfg["alpha"], float(vals[0]), cfg["b"], grid)
        curve = cont.sweep_a(base, vals)
    if len(curve) >= 3:
        curve = cont.detect_fold(curve)
    cont.write_branch_csv(curve, out / "branch.csv")
    summary = {
        "samples": len(curve),
        "fold_index": curve.fold_index,
        "fold_param": None if curve.fold_index is None else float(curve.params[curve.fold_index]),
        "all_folds": [float(curve.params[i]) for i in curve.folds],
        "failures": curve.failures,
    }
    io.write_json(out / "summary.json", summary)
    if curve.failures and not len(curve):
        raise NonConvergenceError("every sweep point failed")
    return summary


def cmd_blowup(cfg, out: Path) -> dict:
    grid = make_grid(cfg["L"], cfg["N"])
    u0, _ = _initial(cfg, grid)
    sched = bu.BlowupSchedule(
        cfg["h0"],
        cfg["t_max"],
        growth=cfg["growth"],
        h_min=cfg["h_min"],
        max_steps=cfg["max_steps"],
        monitor_stride=cfg["monitor_stride"],
        energy_abort_rel=cfg["energy_abort_rel"],
    )
    trace = bu.refine_to_blowup(u0, cfg["alpha"], cfg["a"], sched)
    q0 = solve(GroundStateProblem(cfg["alpha"], 0.0, 1.0, make_grid(cfg["q0_L"], cfg["q0_N"])))
    report = bu.analyse(trace, cfg["alpha"], q0, bu.FitWindowRule(factor=cfg["window_factor"]), config=cfg)
    (out / "report.json").write_text(report.to_json() + "\n")
    io.write_trace_csv(trace, out / "trace.csv")
    if report.t_star is not None:
        bu.write_rate_csv(trace, report, out / "rates.csv")
    for i, (t, f) in enumerate(trace.snapshots):
        io.write_snapshot(out / f"snapshot_{i:02d}.b4nls", f, a=cfg["a"], b=cfg.get("b") or 0.0, alpha=cfg["alpha"], t=t)
    return json.loads(report.to_json())


COMMANDS = {
    "ground": cmd_ground,
    "exact": cmd_exact,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "blowup": cmd_blowup,
}

_HELP = {
    "ground": "solve for a ground state",
    "exact": "sample a closed-form ground state",
    "evolve": "time-evolve initial data (optionally classify a perturbation experiment)",
    "sweep": "sweep ground states in b or a and detect folds",
    "blowup": "refined blow-up run with t*, rate and profile fits",
}


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="binls", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("presets", help="list experiment presets")
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--preset", choices=sorted(k for k, v in PRESETS.items() if v["command"] == name))
        p.add_argument("--config", type=Path, help="JSON configuration document")
        p.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_ENV}/<run>)")
        for key, (typ, default) in schema.items():
            flag = "--" + key.replace("_", "-")
            kw = {"dest": key, "default": argparse.SUPPRESS}
            if typ is bool:
                p.add_argument(flag, type=str, metavar="{true,false}", **kw)
            else:
                p.add_argument(flag, type=str, **kw)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "presets":
        for name in sorted(PRESETS):
            print(f"{name:24s} {PRESETS[name]['command']:7s} {PRESETS[name]['description']}")
        return EXIT_OK
    ns = vars(args)
    flags = {k: ns[k] for k in SCHEMAS[args.command] if k in ns}
    try:
        file_cfg = None
        if args.config is not None:
            try:
                file_cfg = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigurationError(f"cannot read config {args.config}: {exc}") from None
            if not isinstance(file_cfg, dict):
                raise ConfigurationError("config document must be a JSON object")
        cfg = resolve_config(args.command, args.preset, file_cfg, flags)
        out = output_dir(args.output_dir, cfg.get("preset") or args.command)
        io.write_json(out / "config.json", {"command": args.command, **cfg})
        summary = COMMANDS[args.command](cfg, out)
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"error: solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except NumericalFailure as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps(summary, indent=2, sort_keys=True, default=io._jsonable))
    print(f"outputs written to {out}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
