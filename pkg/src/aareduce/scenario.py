"""Scenario files: loading, validation, execution and reports.

A scenario is a JSON object::

    {
      "name": "oscillator_b0",
      "system": {"A": <matrix>, "B": <matrix>},
      "subspace": {"auto": "eigenpairs", "index": 0},
      "initial": [1.0, 0.5, 0.0, 1.0],
      "horizon": 200, "dt": 0.01,
      "forcing": null,
      "analyses": ["hypotheses", "solve", "decompose", "automorphy"],
      "expect": ["overall_true", {"path": "automorphy.combined", "op": "==", "value": "AP_LIKE"}]
    }

Matrices use the ``{"rows", "cols", "re", "im"}`` layout. ``subspace`` is a
subspace object, ``{"auto": "eigenpairs", "index": k}``,
``{"auto": "kernel"}`` or ``{"auto": "coordinates", "indices": [...]}``.
``forcing`` is ``null``, ``{"kind": "zero" | "const" | "cos" | "quasi" |
"decay", ...parameters, "direction": [...]}`` or ``{"kind": "csv", "path":
...}`` (relative to the scenario file). Optional keys: ``eps``,
``bound_cap``, ``g_cap``, ``reference``, ``description``.
"""

from __future__ import annotations

import json
import math
import operator
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .automorphy import read_signal_csv, write_signal_csv
from .errors import AAReduceError, AccuracyError, HypothesisError
from .linalg import DEFAULT_TOL, ToleranceConfig, fro, matrix_from_json, null_space
from .operators import CompanionSystem, builtin_forcing, sampled_forcing
from .solver import (
    decompose,
    forcing_integral,
    make_grid,
    solve_homogeneous,
    solve_nonhomogeneous,
    solve_rk4,
    verify_aa_of_solution,
)
from .subspaces import Subspace, check_hypotheses, eigenpair_subspace

__all__ = ["Scenario", "ScenarioError", "load_scenario", "run_scenario", "RunResult", "dump_report", "REFERENCES"]

ANALYSES = ("hypotheses", "solve", "decompose", "automorphy", "nonhomogeneous")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

# Closed-form first components u_1(s) used by ``reference``.
REFERENCES = {
    "cos": np.cos,
    "one_minus_cos": lambda s: 1 - np.cos(s),
    "one_minus_exp": lambda s: 1 - np.exp(-s),
    "half_s_sin_s": lambda s: s / 2 * np.sin(s),
}

_OPS = {"==": operator.eq, "!=": operator.ne, "<=": operator.le, "<": operator.lt, ">=": operator.ge, ">": operator.gt}


class ScenarioError(AAReduceError, ValueError):
    """Invalid scenario input; ``field`` names the offending key."""

    def __init__(self, msg, field=None):
        super().__init__(f"{field}: {msg}" if field else msg)
        self.field = field


@dataclass
class Expectation:
    path: str
    op: str
    value: object

    def to_json(self):
        return {"path": self.path, "op": self.op, "value": self.value}


@dataclass
class Scenario:
    name: str
    system: CompanionSystem
    subspace_def: dict
    initial: np.ndarray
    horizon: float
    dt: float
    forcing_def: dict | None
    analyses: list
    expect: list = field(default_factory=list)
    eps: float = 0.1
    bound_cap: float = math.inf
    g_cap: float | None = None
    reference: dict | None = None
    description: str = ""
    base_dir: Path = Path(".")
    raw: dict = field(default_factory=dict, repr=False)

    def forcing(self):
        cfg = self.forcing_def
        if cfg is None:
            return None
        kind = cfg["kind"]
        if kind == "csv":
            sig = read_signal_csv(self.base_dir / cfg["path"])
            if sig.values.shape[1] != self.system.n:
                raise ScenarioError(f"CSV has {sig.values.shape[1]} columns, system has n={self.system.n}",
                                    "forcing.path")
            return sampled_forcing(sig.times, sig.values)
        params = {k: v for k, v in cfg.items() if k not in ("kind", "direction")}
        return builtin_forcing(kind, self.system.n, cfg.get("direction"), **params)

    def subspace(self, tol=DEFAULT_TOL) -> Subspace:
        cfg = self.subspace_def
        dim = 2 * self.system.n
        auto = cfg.get("auto")
        if auto == "eigenpairs":
            return eigenpair_subspace(self.system.calA, int(cfg.get("index", 0)), tol)
        if auto == "kernel":
            kernel = null_space(self.system.calA, tol)
            return Subspace(dim, kernel) if kernel.shape[1] else Subspace.zero(dim)
        if auto == "coordinates":
            return Subspace.coordinate(dim, cfg["indices"])
        return Subspace.from_json(cfg, tol)


def _need(obj, key, path, kinds=None):
    if not isinstance(obj, dict) or key not in obj:
        raise ScenarioError("missing required field", f"{path}.{key}" if path else key)
    value = obj[key]
    if kinds is not None and (not isinstance(value, kinds) or isinstance(value, bool)):
        raise ScenarioError(f"expected {_kind_name(kinds)}, got {type(value).__name__}", f"{path}.{key}" if path else key)
    return value


def _kind_name(kinds):
    kinds = kinds if isinstance(kinds, tuple) else (kinds,)
    return " or ".join(k.__name__ for k in kinds)


def _number(obj, key, path, positive=False, default=None):
    if default is not None and key not in obj:
        return default
    value = float(_need(obj, key, path, (int, float)))
    where = f"{path}.{key}" if path else key
    if not math.isfinite(value):
        raise ScenarioError("must be finite", where)
    if positive and value <= 0:
        raise ScenarioError("must be positive", where)
    return value


def _vector(value, where):
    try:
        if isinstance(value, dict):
            re = np.asarray(value["re"], dtype=float)
            im = np.asarray(value.get("im", np.zeros(re.shape)), dtype=float)
            v = re + 1j * im
        else:
            v = np.asarray(value, dtype=complex)
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"not a vector ({exc})", where) from exc
    if v.ndim != 1 or not np.all(np.isfinite(v)):
        raise ScenarioError("must be a flat list of finite numbers", where)
    return v


def _shorthand(token):
    parts = token.rsplit("_", 1)
    if len(parts) == 2 and parts[1] in ("true", "false"):
        head, flag = parts[0], parts[1] == "true"
        if head in ("h1", "h2", "h3", "h4"):
            return Expectation(f"hypotheses.{head}.flag", "==", flag)
        if head == "overall":
            return Expectation("hypotheses.overall", "==", flag)
        if head == "step1":
            return Expectation("decompose.step1_class.flag", "==", flag)
        if head == "g_bounded":
            return Expectation("nonhomogeneous.g_bounded", "==", flag)
    if token.startswith("verdict_"):
        return Expectation("automorphy.combined", "==", token[len("verdict_"):])
    if token == "refused":
        return Expectation("automorphy.refused", "==", True)
    raise ScenarioError(f"unknown expectation shorthand {token!r}", "expect")


def parse_scenario(obj, base_dir=Path("."), tol=DEFAULT_TOL) -> Scenario:
    if not isinstance(obj, dict):
        raise ScenarioError("scenario must be a JSON object")
    name = _need(obj, "name", "", str)
    if not name or any(c in name for c in "/\\") or name.startswith("."):
        raise ScenarioError("must be a plain file-name stem", "name")
    sysobj = _need(obj, "system", "", dict)
    try:
        system = CompanionSystem(matrix_from_json(_need(sysobj, "A", "system", dict)),
                                 matrix_from_json(_need(sysobj, "B", "system", dict)))
    except ScenarioError:
        raise
    except AAReduceError as exc:
        raise ScenarioError(str(exc), "system") from exc

    sub = _need(obj, "subspace", "", dict)
    auto = sub.get("auto")
    if auto is not None:
        if auto not in ("eigenpairs", "kernel", "coordinates"):
            raise ScenarioError(f"unknown directive {auto!r}", "subspace.auto")
        if auto == "coordinates":
            idx = _need(sub, "indices", "subspace", list)
            if not all(isinstance(i, int) and 0 <= i < 2 * system.n for i in idx) or len(set(idx)) != len(idx):
                raise ScenarioError(f"indices must be distinct integers in [0, {2 * system.n})", "subspace.indices")
    else:
        try:
            s = Subspace.from_json(sub, tol)
        except AAReduceError as exc:
            raise ScenarioError(str(exc), "subspace") from exc
        if s.ambient_dim != 2 * system.n:
            raise ScenarioError(f"ambient_dim must be {2 * system.n}", "subspace.ambient_dim")

    initial = _vector(_need(obj, "initial", ""), "initial")
    if initial.size != 2 * system.n:
        raise ScenarioError(f"needs {2 * system.n} entries (u then v), got {initial.size}", "initial")
    dt = _number(obj, "dt", "", positive=True)
    horizon = _number(obj, "horizon", "", positive=True)
    if horizon < 10 * dt * (1 - 1e-12):
        raise ScenarioError("horizon must be at least 10 dt", "horizon")
    steps = round(horizon / dt)
    if abs(steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ScenarioError("horizon must be a multiple of dt", "horizon")

    forcing = obj.get("forcing")
    if forcing is not None:
        if not isinstance(forcing, dict) or "kind" not in forcing:
            raise ScenarioError("must be null or an object with 'kind'", "forcing")
        kind = forcing["kind"]
        if kind == "csv":
            path = _need(forcing, "path", "forcing", str)
            if not (base_dir / path).is_file():
                raise ScenarioError(f"file not found: {path}", "forcing.path")
        elif kind not in ("zero", "const", "cos", "quasi", "decay"):
            raise ScenarioError(f"unknown forcing kind {kind!r}", "forcing.kind")
        else:
            required = {"zero": (), "const": ("c",), "cos": ("omega",), "quasi": ("sigma1", "sigma2"),
                        "decay": ("alpha",)}[kind]
            for key in required:
                _number(forcing, key, "forcing", positive=(kind == "decay"))
            if "direction" in forcing:
                d = _vector(forcing["direction"], "forcing.direction")
                if d.size != system.n:
                    raise ScenarioError(f"needs {system.n} entries", "forcing.direction")

    analyses_raw = _need(obj, "analyses", "", list)
    analyses = []
    for i, item in enumerate(analyses_raw):
        entry = {"kind": item} if isinstance(item, str) else item
        if not isinstance(entry, dict) or entry.get("kind") not in ANALYSES:
            raise ScenarioError(f"must be one of {ANALYSES}", f"analyses[{i}]")
        if entry["kind"] == "nonhomogeneous" and forcing is None:
            raise ScenarioError("nonhomogeneous analysis needs a forcing", f"analyses[{i}]")
        analyses.append(dict(entry))

    expect = []
    for i, item in enumerate(obj.get("expect", [])):
        if isinstance(item, str):
            e = _shorthand(item)
        elif isinstance(item, dict):
            e = Expectation(_need(item, "path", f"expect[{i}]", str), item.get("op", "=="),
                            _need(item, "value", f"expect[{i}]"))
            if e.op not in _OPS:
                raise ScenarioError(f"unknown operator {e.op!r}", f"expect[{i}].op")
        else:
            raise ScenarioError("must be a string or an object", f"expect[{i}]")
        section = e.path.split(".", 1)[0]
        if section not in (a["kind"] for a in analyses):
            raise ScenarioError(f"refers to '{section}', which is not among the analyses", f"expect[{i}]")
        expect.append(e)

    reference = obj.get("reference")
    if reference is not None:
        if not isinstance(reference, dict) or reference.get("u") not in REFERENCES:
            raise ScenarioError(f"needs 'u' in {sorted(REFERENCES)}", "reference")
        comp = reference.get("component", 0)
        if not isinstance(comp, int) or not 0 <= comp < system.n:
            raise ScenarioError(f"component must be in [0, {system.n})", "reference.component")

    bound_cap = obj.get("bound_cap")
    g_cap = obj.get("g_cap")
    scn = Scenario(
        name=name,
        system=system,
        subspace_def=sub,
        initial=initial,
        horizon=horizon,
        dt=dt,
        forcing_def=forcing,
        analyses=analyses,
        expect=expect,
        eps=_number(obj, "eps", "", positive=True, default=0.1),
        bound_cap=math.inf if bound_cap is None else _number(obj, "bound_cap", "", positive=True),
        g_cap=None if g_cap is None else _number(obj, "g_cap", "", positive=True),
        reference=reference,
        description=str(obj.get("description", "")),
        base_dir=base_dir,
        raw=obj,
    )
    # Build the subspace and forcing once so that bad indices or unreadable
    # CSV data surface as input errors rather than mid-run.
    for where, build in (("subspace", lambda: scn.subspace(tol)), ("forcing", scn.forcing)):
        try:
            build()
        except ScenarioError:
            raise
        except (AAReduceError, OSError, ValueError) as exc:
            raise ScenarioError(str(exc), where) from exc
    return scn


def load_scenario(path, tol=DEFAULT_TOL) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_scenario(obj, path.parent, tol)


def _clean(x):
    """Plain JSON values with floats rounded to 12 significant digits."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}") + 0.0
    if x is None or isinstance(x, str):
        return x
    if hasattr(x, "value"):
        return x.value
    raise TypeError(f"cannot serialise {type(x).__name__}")


def dump_report(report, path):
    Path(path).write_text(json.dumps(_clean(report), indent=2) + "\n")


def _lookup(report, path):
    node = report
    for part in path.split("."):
        if isinstance(node, dict) and part in node:
            node = node[part]
        else:
            return None, False
    return node, True


@dataclass
class RunResult:
    exit_code: int
    report: dict
    outdir: Path
    message: str = ""


def _reference_error(scn, traj):
    if scn.reference is None:
        return None
    f = REFERENCES[scn.reference["u"]]
    comp = scn.reference.get("component", 0)
    return float(np.max(np.abs(traj.u[:, comp] - f(traj.grid))))


def run_scenario(scn: Scenario, outdir, tol=DEFAULT_TOL, only=None) -> RunResult:
    """Execute the analyses in order and write ``<name>.report.json``.

    ``only`` restricts the run to the named analyses (and the expectations
    about them). Exit code 0 when every evaluated expectation holds, 3 on
    a failed expectation or numerical self-check.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    analyses = [a for a in scn.analyses if only is None or a["kind"] in only]
    if only is not None:
        for kind in only:
            if kind not in (a["kind"] for a in analyses):
                analyses.insert(0, {"kind": kind})
    report = {
        "scenario": scn.name,
        "description": scn.description,
        "tolerances": {"algebra_tol": tol.algebra_tol, "rank_tol": tol.rank_tol, "ode_tol": tol.ode_tol},
        "system": scn.system.to_json(),
    }
    message = ""
    numerical_failure = False
    try:
        S = scn.subspace(tol)
        report["subspace"] = S.to_json()
        forcing = scn.forcing()
        grid = make_grid(scn.horizon, scn.dt)
        traj = None

        def trajectory():
            nonlocal traj
            if traj is None:
                if forcing is None:
                    traj = solve_homogeneous(scn.system, scn.initial, grid)
                else:
                    traj = solve_nonhomogeneous(scn.system, scn.initial, forcing, grid, tol)
            return traj

        for entry in analyses:
            kind = entry["kind"]
            if kind == "hypotheses":
                report["hypotheses"] = check_hypotheses(scn.system, S, tol).to_json()
            elif kind == "solve":
                tr = trajectory()
                rk4 = solve_rk4(scn.system, scn.initial, grid, forcing, tol)
                section = {
                    "path": tr.meta,
                    "samples": int(tr.grid.size),
                    "rk4_sup_distance": float(np.max(np.linalg.norm(tr.states - rk4.states, axis=1))),
                    "sup_norm": float(np.max(np.linalg.norm(tr.states, axis=1))),
                }
                ref = _reference_error(scn, tr)
                if ref is not None:
                    section["reference"] = scn.reference["u"]
                    section["reference_error"] = ref
                report["solve"] = section
                tr.to_csv(outdir / f"{scn.name}.traj.csv")
            elif kind == "nonhomogeneous":
                tr = solve_nonhomogeneous(scn.system, scn.initial, forcing, grid, tol)
                rk4 = solve_rk4(scn.system, scn.initial, grid, forcing, tol)
                g = forcing_integral(scn.system.generator, forcing, grid, tol=tol)
                g_sup = float(np.max(np.linalg.norm(g, axis=1)))
                section = {
                    "forcing": forcing.description,
                    "vs_rk4_sup_distance": float(np.max(np.linalg.norm(tr.states - rk4.states, axis=1))),
                    "forcing_integral_sup": g_sup,
                }
                if scn.g_cap is not None:
                    section["g_cap"] = scn.g_cap
                    section["g_bounded"] = g_sup <= scn.g_cap
                ref = _reference_error(scn, tr)
                if ref is not None:
                    section["reference"] = scn.reference["u"]
                    section["reference_error"] = ref
                report["nonhomogeneous"] = section
            elif kind == "decompose":
                tr = trajectory()
                dec = decompose(scn.system, S, tr, forcing, tol)
                section = dec.to_json()
                if entry.get("refine"):
                    fine_grid = make_grid(scn.horizon, scn.dt / 2)
                    if forcing is None:
                        fine = solve_homogeneous(scn.system, scn.initial, fine_grid)
                    else:
                        fine = solve_nonhomogeneous(scn.system, scn.initial, forcing, fine_grid, tol)
                    fdec = decompose(scn.system, S, fine, forcing, tol)
                    section["refined"] = fdec.to_json()
                    section["refinement_ratio"] = _refinement_ratios(dec, fdec)
                report["decompose"] = section
            elif kind == "automorphy":
                try:
                    res = verify_aa_of_solution(scn.system, S, scn.initial, scn.horizon, forcing, dt=scn.dt,
                                                eps=scn.eps, bound_cap=scn.bound_cap, tol=tol)
                except HypothesisError as exc:
                    report["automorphy"] = {"refused": True, "reason": str(exc)}
                else:
                    report["automorphy"] = res.to_json()
                    write_signal_csv(trajectory().to_signal(), outdir / f"{scn.name}.signal.csv")
    except AccuracyError as exc:
        numerical_failure = True
        message = f"numerical accuracy failure: {exc} (residual {exc.residual:.6g}, threshold {exc.threshold:.6g})"
        report["error"] = {"kind": "accuracy", "message": str(exc), "residual": exc.residual,
                           "threshold": exc.threshold}

    kinds = {a["kind"] for a in analyses}
    results = []
    for e in scn.expect:
        if e.path.split(".", 1)[0] not in kinds:
            continue
        actual, found = _lookup(report, e.path)
        try:
            ok = found and bool(_OPS[e.op](actual, e.value))
        except TypeError:
            ok = False
        results.append({**e.to_json(), "actual": actual if found else None, "passed": ok})
    report["assertions"] = results
    failed = [r for r in results if not r["passed"]]
    report["passed"] = not failed and not numerical_failure
    dump_report(report, outdir / f"{scn.name}.report.json")
    if failed and not message:
        r = failed[0]
        message = f"assertion failed: {r['path']} {r['op']} {r['value']!r} (actual {r['actual']!r})"
    return RunResult(EXIT_OK if report["passed"] else EXIT_NUMERICAL, report, outdir, message)


NOISE_FLOOR = 1e-12


def _refinement_ratios(coarse, fine):
    out = {}
    for key in ("projected_dynamics_residual_S", "projected_dynamics_residual_Scomp"):
        a, b = getattr(coarse, key), getattr(fine, key)
        out[key] = a / b if a > NOISE_FLOOR and b > 0 else None
    return out


def with_tolerances(tol: ToleranceConfig, algebra=None, ode=None) -> ToleranceConfig:
    changes = {}
    if algebra is not None:
        changes["algebra_tol"] = algebra
    if ode is not None:
        changes["ode_tol"] = ode
    return replace(tol, **changes)
