"""Shipped scenario catalog.

Every entry is a plain scenario object (see :mod:`aareduce.scenario`) whose
expectations hold, so ``aareduce check`` exits 0 on each of them.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .linalg import matrix_to_json

__all__ = ["CATALOG", "demo_names", "demo_scenario", "emit_demo"]


def _diag(*values):
    return matrix_to_json(np.diag(np.asarray(values, dtype=float)))


def _system(a, b):
    return {"A": _diag(*a), "B": _diag(*b)}


def _bound(path, op, value):
    return {"path": path, "op": op, "value": value}


CATALOG = {
    "oscillator_b0": {
        "description": "two undamped oscillators with incommensurate frequencies 1 and sqrt 2",
        "system": _system((1, 2), (0, 0)),
        "subspace": {"auto": "eigenpairs", "index": 0},
        "initial": [1.0, 0.5, 0.0, 1.0],
        "horizon": 200,
        "dt": 0.01,
        "forcing": None,
        "analyses": ["hypotheses", "solve", "decompose", "automorphy"],
        "expect": [
            "overall_true",
            "step1_true",
            "verdict_AP_LIKE",
            _bound("solve.rk4_sup_distance", "<=", 1e-6),
            _bound("decompose.group_form_residual", "<=", 1e-9),
            _bound("decompose.group_form_residual_Scomp", "<=", 1e-9),
        ],
    },
    "oscillator_commensurate": {
        "description": "frequencies 1 and 2; the solution is 2 pi periodic",
        "system": _system((1, 4), (0, 0)),
        "subspace": {"auto": "coordinates", "indices": [1, 3]},
        "initial": [1.0, 1.0, 0.0, 0.0],
        "horizon": 100,
        "dt": 0.01,
        "forcing": None,
        "analyses": ["hypotheses", "automorphy"],
        "expect": ["overall_true", "verdict_AP_LIKE"],
    },
    "decomposition_step1": {
        "description": "damping on the second mode only; initial data orthogonal to the damped block",
        "system": _system((1, 4), (0, 1)),
        "subspace": {"auto": "coordinates", "indices": [1, 3]},
        "initial": [1.0, 0.0, 0.0, 0.0],
        "horizon": 20,
        "dt": 0.001,
        "forcing": None,
        "analyses": ["hypotheses", "solve", {"kind": "decompose", "refine": True}],
        "expect": [
            "h1_true",
            "h2_true",
            "h3_true",
            "h4_false",
            "step1_true",
            _bound("decompose.recomposition_residual", "<=", 1e-12),
            _bound("decompose.projected_dynamics_residual_S", "<=", 1e-5),
            _bound("decompose.projected_dynamics_residual_Scomp", "<=", 1e-5),
            _bound("decompose.group_form_residual", "<=", 1e-5),
            _bound("decompose.group_form_residual_Scomp", "<=", 1e-5),
            _bound("decompose.refinement_ratio.projected_dynamics_residual_Scomp", ">=", 3),
        ],
    },
    "violated_step1": {
        "description": "same system, but the damped mode is excited so v leaves N(B)",
        "system": _system((1, 4), (0, 1)),
        "subspace": {"auto": "coordinates", "indices": [1, 3]},
        "initial": [0.0, 1.0, 0.0, 1.0],
        "horizon": 20,
        "dt": 0.001,
        "forcing": None,
        "analyses": ["hypotheses", "decompose", "automorphy"],
        "expect": [
            "step1_false",
            "refused",
            _bound("decompose.projected_dynamics_residual_S", ">=", 1e-2),
        ],
    },
    "violated_range": {
        "description": "subspace spans the undamped mode, so the range of calB is not inside it",
        "system": _system((1, 4), (0, 1)),
        "subspace": {"auto": "coordinates", "indices": [0, 2]},
        "initial": [1.0, 1.0, 0.0, 0.0],
        "horizon": 20,
        "dt": 0.001,
        "forcing": None,
        "analyses": ["hypotheses", "decompose", "automorphy"],
        "expect": [
            "h2_true",
            "h3_false",
            "refused",
            _bound("decompose.projected_dynamics_residual_Scomp", ">=", 1e-2),
        ],
    },
    "free_oscillator": {
        "description": "u'' + u = 0 with u(0) = 1, u'(0) = 0, so u = cos s",
        "system": _system((1,), (0,)),
        "subspace": {"auto": "kernel"},
        "initial": [1.0, 0.0],
        "horizon": 20,
        "dt": 0.01,
        "forcing": None,
        "reference": {"u": "cos", "component": 0},
        "analyses": ["hypotheses", "solve"],
        "expect": ["h1_true", "h2_false", _bound("solve.reference_error", "<=", 1e-8)],
    },
    "first_order_decay": {
        "description": "u'' + u' = 0 with u(0) = 0, u'(0) = 1, so u = 1 - exp(-s)",
        "system": _system((0,), (0.5,)),
        "subspace": {"auto": "kernel"},
        "initial": [0.0, 1.0],
        "horizon": 20,
        "dt": 0.01,
        "forcing": None,
        "reference": {"u": "one_minus_exp", "component": 0},
        "analyses": ["solve"],
        "expect": [_bound("solve.reference_error", "<=", 1e-8)],
    },
    "constant_forcing": {
        "description": "u'' + u = 1 from rest, so u = 1 - cos s",
        "system": _system((1,), (0,)),
        "subspace": {"auto": "kernel"},
        "initial": [0.0, 0.0],
        "horizon": 20,
        "dt": 0.01,
        "forcing": {"kind": "const", "c": 1.0},
        "reference": {"u": "one_minus_cos", "component": 0},
        "analyses": ["nonhomogeneous"],
        "expect": [
            _bound("nonhomogeneous.vs_rk4_sup_distance", "<=", 1e-6),
            _bound("nonhomogeneous.reference_error", "<=", 1e-6),
        ],
    },
    "resonance": {
        "description": "u'' + u = cos s from rest, so u = (s/2) sin s grows linearly",
        "system": _system((1,), (0,)),
        "subspace": {"auto": "kernel"},
        "initial": [0.0, 0.0],
        "horizon": 20,
        "dt": 0.01,
        "forcing": {"kind": "cos", "omega": 1.0},
        "reference": {"u": "half_s_sin_s", "component": 0},
        "analyses": ["nonhomogeneous"],
        "expect": [
            _bound("nonhomogeneous.vs_rk4_sup_distance", "<=", 1e-6),
            _bound("nonhomogeneous.reference_error", "<=", 1e-5),
        ],
    },
    "decay_forcing": {
        "description": "integrable forcing exp(-s) on an undamped oscillator; the forcing integral stays bounded",
        "system": _system((1,), (0,)),
        "subspace": {"auto": "kernel"},
        "initial": [0.0, 0.0],
        "horizon": 50,
        "dt": 0.01,
        "forcing": {"kind": "decay", "alpha": 1.0},
        "g_cap": 2.0,
        "analyses": ["nonhomogeneous"],
        "expect": ["g_bounded_true", _bound("nonhomogeneous.vs_rk4_sup_distance", "<=", 1e-6)],
    },
    "quasi_forcing": {
        "description": "two-frequency forcing away from resonance on two undamped modes",
        "system": _system((1, 4), (0, 0)),
        "subspace": {"auto": "coordinates", "indices": [1, 3]},
        "initial": [0.0, 0.0, 0.0, 0.0],
        "horizon": 100,
        "dt": 0.01,
        "forcing": {"kind": "quasi", "sigma1": 1.5, "sigma2": math.sqrt(3.0)},
        "analyses": ["hypotheses", "nonhomogeneous", "automorphy"],
        "expect": [
            "overall_true",
            _bound("nonhomogeneous.vs_rk4_sup_distance", "<=", 1e-6),
            _bound("automorphy.combined", "!=", "FAIL"),
        ],
    },
    "defective_refusal": {
        "description": "A = 0 makes calA nilpotent; the group is not almost automorphic and the check refuses",
        "system": _system((0,), (0,)),
        "subspace": {"auto": "coordinates", "indices": [0]},
        "initial": [0.0, 1.0],
        "horizon": 20,
        "dt": 0.01,
        "forcing": None,
        "analyses": ["hypotheses", "automorphy"],
        "expect": ["h1_false", "h2_false", "refused"],
    },
    "unstable_scalar": {
        "description": "u'' - u = 0; calA has real eigenvalues +-1",
        "system": _system((-1,), (0,)),
        "subspace": {"auto": "eigenpairs", "index": 0},
        "initial": [1.0, 0.0],
        "horizon": 10,
        "dt": 0.01,
        "forcing": None,
        "analyses": ["hypotheses", "automorphy"],
        "expect": ["h1_false", "refused"],
    },
}


def demo_names() -> list[str]:
    return list(CATALOG)


def demo_scenario(name) -> dict:
    if name not in CATALOG:
        raise KeyError(name)
    return {"name": name, **CATALOG[name]}


def emit_demo(name, directory) -> Path:
    """Write ``<directory>/<name>.json`` and return its path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{name}.json"
    path.write_text(json.dumps(demo_scenario(name), indent=2) + "\n")
    return path
