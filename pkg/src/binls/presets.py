"""Named experiment configurations for the standard ground-state, evolution and blow-up runs.

Each preset pins the command it drives and every parameter that command needs;
command-line flags and JSON config files may still override individual keys.
"""

from __future__ import annotations

from copy import deepcopy

from .errors import ConfigurationError

PRESETS = {
    "table-1": {
        "command": "sweep",
        "description": "ground-state masses for alpha=8, b=2 across a",
        "alpha": 8.0,
        "b": 2.0,
        "swept": "a",
        "values": "-2,-1,0,1,1.35",
        "L": 10.0,
        "N": 1024,
    },
    "fig-4-alpha6": {
        "command": "sweep",
        "description": "two-branch M(b), E(b) for alpha=6, a=1",
        "alpha": 6.0,
        "a": 1.0,
        "swept": "b",
        "values": "default",
        "L": 10.0,
        "N": 1024,
    },
    "fig-8": {
        "command": "evolve",
        "description": "perturbed unstable ground state alpha=6, a=1, b=1.1 (A=0.99 disperses)",
        "alpha": 6.0,
        "a": 1.0,
        "b": 1.1,
        "kind": "AQ",
        "A": 0.99,
        "L": 50.0,
        "N": 2048,
        "t0": 0.0,
        "t1": 20.0,
        "n_steps": 20000,
        "experiment": True,
    },
    "fig-14": {
        "command": "blowup",
        "description": "critical blow-up of 1.1 Q for alpha=8, a=-2, b=2",
        "alpha": 8.0,
        "a": -2.0,
        "b": 2.0,
        "kind": "AQ",
        "A": 1.1,
        "L": 8.0,
        "N": 8192,
        "h0": 1e-4,
        "t_max": 1.0,
    },
    "fig-15": {
        "command": "blowup",
        "description": "critical blow-up of 1.7 exp(-x^2) for alpha=8, a=1",
        "alpha": 8.0,
        "a": 1.0,
        "kind": "gaussian",
        "A": 1.7,
        "L": 8.0,
        "N": 8192,
        "h0": 1e-5,
        "t_max": 1.0,
    },
    "fig-18": {
        "command": "blowup",
        "description": "supercritical blow-up of 1.7 exp(-x^2) for alpha=10, a=1",
        "alpha": 10.0,
        "a": 1.0,
        "kind": "gaussian",
        "A": 1.7,
        "L": 8.0,
        "N": 8192,
        "h0": 1e-6,
        "t_max": 1.0,
    },
    "soliton-test": {
        "command": "evolve",
        "description": "ground state alpha=8, a=1, b=2 propagated over t in [0,1]",
        "alpha": 8.0,
        "a": 1.0,
        "b": 2.0,
        "kind": "AQ",
        "A": 1.0,
        "L": 10.0,
        "N": 1024,
        "t0": 0.0,
        "t1": 1.0,
        "n_steps": 2000,
    },
    "gaussian-a0-alpha2-A2": {
        "command": "evolve",
        "description": "2 exp(-x^2) for alpha=2, a=0 on x in [-100 pi, 100 pi]",
        "alpha": 2.0,
        "a": 0.0,
        "kind": "gaussian",
        "A": 2.0,
        "L": 100.0,
        "N": 4096,
        "t0": 0.0,
        "t1": 10.0,
        "n_steps": 10000,
    },
}

# the CLI examples refer to the a = -2 blow-up by this name
PRESETS["critical-a-neg2"] = {**PRESETS["fig-14"], "description": "alias of fig-14"}


def get_preset(name: str, command: str | None = None) -> dict:
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    p = deepcopy(PRESETS[name])
    if command is not None and p["command"] != command:
        raise ConfigurationError(f"preset {name!r} belongs to the {p['command']!r} command")
    p.pop("description")
    p.pop("command")
    return p
