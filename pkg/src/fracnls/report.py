"""Run manifests, parameter sweeps and condition reports.

A run manifest is a JSON object::

    {
      "params":   {"N": 2, "s1": 0.75, "s2": 0.25, "p": 4, "q": 2.2, "mu": 20, "a": 1},
      "constants": {"gn_q": ..., "gn_p": ..., "sobolev_S": ...}
                   | {"estimate_on": {"dim": 2, "points_per_axis": 128, "box_half_length": 12}},
      "grid":     {"dim": 2, "points_per_axis": 128, "box_half_length": 12},
      "solver":   {"step": 0.5, ...},
      "tasks":    ["conditions", "h_geometry", "local_min", ...],
      "output_dir": "out/desk"
    }

Every task writes ``<task>.json`` into ``output_dir``; solver tasks also write
the field (binary) and an iteration trace (CSV).  ``summary.json`` lists the
task outcomes and the manifest hash; wall times live in its ``metadata`` block
only, so every other byte is reproducible.

Numbers in reports carry a ``source`` tag: ``formula`` for closed-form
threshold arithmetic, ``measured`` for quantities evaluated on a computed
field, ``estimated`` or ``user-supplied`` for the constants table.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .constants import estimate_gn_constant, estimate_sobolev_constant
from .errors import FracNLSError, ManifestError, ParameterError
from .fieldio import atomic_write_bytes, write_field
from .solver import TRACE_COLUMNS, SolverConfig, gaussian_seed, local_minimize, mountain_pass
from .spectral import GridDescriptor
from .thresholds import (
    ConstantsTable,
    Provenance,
    check_A0,
    check_A1,
    check_A2,
    critical_thresholds,
    h_geometry,
    h_subcritical,
)
from .variational import (
    ProblemParams,
    Regime,
    fiber_coefficients,
    fiber_geometry,
    fiber_value_array,
)

__all__ = [
    "TASKS",
    "SWEEP_AXES",
    "RunManifest",
    "SweepSpec",
    "validate_manifest",
    "validate_sweep",
    "load_json",
    "manifest_hash",
    "resolve_constants",
    "conditions_report",
    "run",
    "sweep",
    "dumps",
]

TASKS = ("conditions", "h_geometry", "local_min", "mountain_pass", "critical_thresholds", "fiber_scan")
SWEEP_AXES = ("mu", "a", "q", "p", "s1", "s2")
_PARAM_KEYS = ("N", "s1", "s2", "p", "q", "mu", "a")
_SUBCRITICAL_ONLY = {"h_geometry", "mountain_pass"}
_CRITICAL_ONLY = {"critical_thresholds"}


# ---------------------------------------------------------------------------
# Serialization


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, non-finite numbers as null."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _canonical(obj) -> bytes:
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def manifest_hash(doc: dict) -> str:
    """Git blob hash of the canonical manifest encoding."""
    body = _canonical(doc)
    return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()


def load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class RunManifest:
    params: ProblemParams
    constants: ConstantsTable | GridDescriptor  # table, or the grid to estimate on
    grid: GridDescriptor
    solver: SolverConfig
    tasks: tuple[str, ...]
    output_dir: str
    regime: Regime
    source: dict

    @property
    def hash(self) -> str:
        return manifest_hash(self.source)


@dataclass(frozen=True)
class SweepSpec:
    base: RunManifest
    axis: str
    values: tuple[float, ...]
    source: dict


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _grid(doc, ptr, errors):
    if not isinstance(doc, dict):
        errors.append((ptr, "expected an object"))
        return None
    extra = set(doc) - {"dim", "points_per_axis", "box_half_length"}
    for k in sorted(extra):
        errors.append((f"{ptr}/{k}", "unknown key"))
    ok = True
    for k in ("dim", "points_per_axis"):
        if not isinstance(doc.get(k), int) or isinstance(doc.get(k), bool):
            errors.append((f"{ptr}/{k}", "expected an integer"))
            ok = False
    L = doc.get("box_half_length", 12.0)
    if not _is_number(L):
        errors.append((f"{ptr}/box_half_length", "expected a finite number"))
        ok = False
    if not ok:
        return None
    if doc["dim"] not in (1, 2, 3):
        errors.append((f"{ptr}/dim", "dim must be 1, 2 or 3"))
        return None
    if doc["points_per_axis"] < 4 or doc["points_per_axis"] % 2:
        errors.append((f"{ptr}/points_per_axis", "must be even and >= 4"))
        return None
    if not L > 0:
        errors.append((f"{ptr}/box_half_length", "must be positive"))
        return None
    return GridDescriptor(doc["dim"], doc["points_per_axis"], float(L))


def _params(doc, errors):
    ptr = "/params"
    if not isinstance(doc, dict):
        errors.append((ptr, "expected an object"))
        return None, None
    for k in sorted(set(doc) - set(_PARAM_KEYS)):
        errors.append((f"{ptr}/{k}", "unknown key"))
    before = len(errors)
    for k in _PARAM_KEYS:
        if k not in doc:
            errors.append((f"{ptr}/{k}", "missing"))
        elif not _is_number(doc[k]):
            errors.append((f"{ptr}/{k}", "expected a finite number"))
    if len(errors) > before:
        return None, None
    N, s1, s2, p, q, mu, a = (doc[k] for k in _PARAM_KEYS)
    if int(N) != N or N < 1:
        errors.append((f"{ptr}/N", "must be a positive integer"))
    for k, v in (("s1", s1), ("s2", s2)):
        if not 0 < v < 1:
            errors.append((f"{ptr}/{k}", "must lie in (0, 1)"))
    if 0 < s1 < 1 and 0 < s2 < 1 and not s2 < s1:
        errors.append((f"{ptr}/s2", "s2 < s1 is required"))
    if 0 < s1 < 1 and not N > 2 * s1:
        errors.append((f"{ptr}/s1", "N > 2 s1 is required"))
    for k, v in (("p", p), ("q", q)):
        if not v > 2:
            errors.append((f"{ptr}/{k}", "must exceed 2"))
    for k, v in (("mu", mu), ("a", a)):
        if not v > 0:
            errors.append((f"{ptr}/{k}", "must be positive"))
    if len(errors) > before:
        return None, None
    prm = ProblemParams(int(N), float(s1), float(s2), float(p), float(q), float(mu), float(a))
    regime, problems = prm.regime_violations()
    for msg in problems:
        key = "q" if msg.startswith("q ") else "p"
        errors.append((f"{ptr}/{key}", "regime needs the strict inequality " + msg))
    return prm, regime


def _constants(doc, prm, regime, errors):
    ptr = "/constants"
    if not isinstance(doc, dict):
        errors.append((ptr, "expected an object"))
        return None
    if "estimate_on" in doc:
        for k in sorted(set(doc) - {"estimate_on"}):
            errors.append((f"{ptr}/{k}", "unknown key"))
        return _grid(doc["estimate_on"], f"{ptr}/estimate_on", errors)
    allowed = {"gn_q", "gn_p", "sobolev_S", "provenance", "grid_used"}
    for k in sorted(set(doc) - allowed):
        errors.append((f"{ptr}/{k}", "unknown key"))
    before = len(errors)
    for k in ("gn_q", "gn_p", "sobolev_S"):
        if not _is_number(doc.get(k)) or not doc[k] > 0:
            errors.append((f"{ptr}/{k}", "expected a positive finite number"))
    prov = doc.get("provenance", Provenance.USER_SUPPLIED.value)
    if prov not in {p.value for p in Provenance}:
        errors.append((f"{ptr}/provenance", f"expected one of {[p.value for p in Provenance]}"))
    grid_used = None
    if doc.get("grid_used") is not None:
        grid_used = _grid(doc["grid_used"], f"{ptr}/grid_used", errors)
    if len(errors) > before:
        return None
    ct = ConstantsTable(doc["gn_q"], doc["gn_p"], doc["sobolev_S"], prov, grid_used)
    if prm is not None and regime is Regime.SOBOLEV_CRITICAL:
        try:
            ct.check(prm)
        except ParameterError as exc:
            errors.append((f"{ptr}/gn_p", str(exc)))
    return ct


def _solver(doc, errors):
    ptr = "/solver"
    if doc is None:
        return SolverConfig()
    if not isinstance(doc, dict):
        errors.append((ptr, "expected an object"))
        return None
    names = {f.name: f.type for f in fields(SolverConfig)}
    before = len(errors)
    for k, v in doc.items():
        if k not in names:
            errors.append((f"{ptr}/{k}", "unknown key"))
        elif names[k] == "int" and (not isinstance(v, int) or isinstance(v, bool)):
            errors.append((f"{ptr}/{k}", "expected an integer"))
        elif names[k] == "float" and not _is_number(v):
            errors.append((f"{ptr}/{k}", "expected a finite number"))
    if len(errors) > before:
        return None
    try:
        return SolverConfig(**doc)
    except ValueError as exc:
        # Messages start with the offending field name.
        name = str(exc).split()[0]
        errors.append((f"{ptr}/{name}" if name in names else ptr, str(exc)))
        return None


def _tasks(doc, regime, errors):
    ptr = "/tasks"
    if not isinstance(doc, list) or not doc:
        errors.append((ptr, "expected a non-empty list"))
        return None
    for i, t in enumerate(doc):
        if t not in TASKS:
            errors.append((f"{ptr}/{i}", f"unknown task {t!r}; expected one of {list(TASKS)}"))
        elif regime is Regime.SOBOLEV_CRITICAL and t in _SUBCRITICAL_ONLY:
            errors.append((f"{ptr}/{i}", f"task {t} needs the SubcriticalPair regime"))
        elif regime is Regime.SUBCRITICAL_PAIR and t in _CRITICAL_ONLY:
            errors.append((f"{ptr}/{i}", f"task {t} needs the SobolevCritical regime"))
    if len(set(doc)) != len(doc):
        errors.append((ptr, "tasks must not repeat"))
    return tuple(doc)


def _validate(doc, errors) -> RunManifest | None:
    if not isinstance(doc, dict):
        errors.append(("", "manifest must be a JSON object"))
        return None
    for k in sorted(set(doc) - {"params", "constants", "grid", "solver", "tasks", "output_dir"}):
        errors.append((f"/{k}", "unknown key"))
    for k in ("params", "constants", "grid", "tasks", "output_dir"):
        if k not in doc:
            errors.append((f"/{k}", "missing"))
    prm, regime = _params(doc.get("params"), errors) if "params" in doc else (None, None)
    ct = _constants(doc["constants"], prm, regime, errors) if "constants" in doc else None
    grid = _grid(doc["grid"], "/grid", errors) if "grid" in doc else None
    if grid is not None and prm is not None and grid.dim != prm.N:
        errors.append(("/grid/dim", f"grid dimension must equal N = {prm.N}"))
    if isinstance(ct, GridDescriptor) and prm is not None and ct.dim != prm.N:
        errors.append(("/constants/estimate_on/dim", f"grid dimension must equal N = {prm.N}"))
    cfg = _solver(doc.get("solver"), errors)
    tasks = _tasks(doc["tasks"], regime, errors) if "tasks" in doc else None
    out = doc.get("output_dir")
    if "output_dir" in doc and (not isinstance(out, str) or not out):
        errors.append(("/output_dir", "expected a non-empty path string"))
    if errors:
        return None
    return RunManifest(prm, ct, grid, cfg, tasks, out, regime, doc)


def validate_manifest(doc) -> RunManifest:
    """Check every field; raises :class:`ManifestError` with all problems found."""
    errors: list[tuple[str, str]] = []
    m = _validate(doc, errors)
    if errors:
        raise ManifestError(errors)
    return m


def validate_sweep(doc) -> SweepSpec:
    """Validate a sweep spec ``{"base": manifest, "axis": ..., "values": [...]}``.

    Only the base manifest must be valid; swept points are revalidated one by
    one and invalid points become flagged rows.
    """
    errors: list[tuple[str, str]] = []
    if not isinstance(doc, dict):
        raise ManifestError([("", "sweep spec must be a JSON object")])
    for k in sorted(set(doc) - {"base", "axis", "values"}):
        errors.append((f"/{k}", "unknown key"))
    sub: list[tuple[str, str]] = []
    base = _validate(doc.get("base"), sub) if "base" in doc else None
    if "base" not in doc:
        errors.append(("/base", "missing"))
    errors.extend((f"/base{p}", msg) for p, msg in sub)
    axis = doc.get("axis")
    if axis not in SWEEP_AXES:
        errors.append(("/axis", f"expected one of {list(SWEEP_AXES)}"))
    values = doc.get("values")
    if not isinstance(values, list) or not values:
        errors.append(("/values", "expected a non-empty list"))
    else:
        for i, v in enumerate(values):
            if not _is_number(v):
                errors.append((f"/values/{i}", "expected a finite number"))
        nums = [v for v in values if _is_number(v)]
        if len(nums) == len(values) and any(b <= a for a, b in zip(nums, nums[1:])):
            errors.append(("/values", "values must be strictly ascending"))
    if errors:
        raise ManifestError(errors)
    return SweepSpec(base, axis, tuple(float(v) for v in values), doc)


# ---------------------------------------------------------------------------
# Constants and reports


_ESTIMATE_CACHE: dict = {}


def _estimated(kind, N, s, r, grid):
    key = (kind, N, s, r, grid)
    if key not in _ESTIMATE_CACHE:
        if kind == "gn":
            est = estimate_gn_constant(N, s, r, grid, refine=False)
        else:
            est = estimate_sobolev_constant(N, s, grid, refine=False)
        _ESTIMATE_CACHE[key] = est.value
    return _ESTIMATE_CACHE[key]


def resolve_constants(m: RunManifest) -> ConstantsTable:
    """The manifest's table, estimating it on the requested grid if asked."""
    if isinstance(m.constants, ConstantsTable):
        return m.constants
    prm, g = m.params, m.constants
    gn_q = _estimated("gn", prm.N, prm.s1, prm.q, g)
    S = _estimated("sobolev", prm.N, prm.s1, None, g)
    if m.regime is Regime.SOBOLEV_CRITICAL:
        return ConstantsTable.for_critical(gn_q, S, prm, provenance=Provenance.ESTIMATED, grid_used=g)
    gn_p = _estimated("gn", prm.N, prm.s1, prm.p, g)
    return ConstantsTable(gn_q, gn_p, S, Provenance.ESTIMATED, g)


def _constants_dict(ct: ConstantsTable) -> dict:
    d = ct.to_dict()
    d["source"] = ct.source_tag
    return d


def _condition(res) -> dict:
    d = res.to_dict()
    d["source"] = "formula"
    return d


def conditions_report(prm: ProblemParams, ct: ConstantsTable) -> dict:
    """Admissibility verdicts, h geometry and critical thresholds for one parameter set.

    Sections that do not apply to the regime are null.  Every verdict is
    conditional on the constants table, whose provenance is reported.
    """
    regime = prm.require_regime()
    out = {
        "params": prm.to_dict(),
        "constants": _constants_dict(ct),
        "A0": None,
        "A1": None,
        "A2": None,
        "h_geometry": None,
        "critical": None,
    }
    if regime is Regime.SUBCRITICAL_PAIR:
        a1 = check_A1(prm, ct)
        out["A0"] = _condition(check_A0(prm, ct))
        out["A1"] = _condition(a1)
        out["A2"] = _condition(check_A2(prm, ct))
        if a1.passed:
            hg = h_geometry(prm, ct)
            out["h_geometry"] = {"R0": hg.R0, "R1": hg.R1, "t_max": hg.t_max, "source": "formula"}
        else:
            out["h_geometry"] = {"R0": None, "R1": None, "t_max": None, "degenerate": True, "source": "formula"}
    else:
        thr = critical_thresholds(prm, ct)
        out["critical"] = {
            "a0": thr.a0,
            "abar0": thr.abar0,
            "K0": thr.K0,
            "rho_0": thr.rho_0,
            "a_below_limit": prm.a < thr.a_limit,
            "source": "formula",
        }
    return out


# ---------------------------------------------------------------------------
# Run


class _Context:
    def __init__(self, m: RunManifest, ct: ConstantsTable, out: Path):
        self.m = m
        self.ct = ct
        self.out = out
        self.records: dict = {}
        self.fiber_cache: dict = {}

    def geometry(self, cf):
        key = (cf.A, cf.B, cf.C, cf.D)
        if key not in self.fiber_cache:
            try:
                self.fiber_cache[key] = fiber_geometry(cf, self.m.params)
            except FracNLSError as exc:
                self.fiber_cache[key] = exc
        return self.fiber_cache[key]


def _write_json(path: Path, obj) -> None:
    atomic_write_bytes(path, dumps(obj).encode())


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_csv_cell(v) for v in row])
    atomic_write_bytes(path, buf.getvalue().encode())


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _task_conditions(ctx):
    return conditions_report(ctx.m.params, ctx.ct)


def _task_h_geometry(ctx):
    prm, ct = ctx.m.params, ctx.ct
    hg = h_geometry(prm, ct)
    d = hg.to_dict()
    d["h_at_R0"] = h_subcritical(hg.R0, prm, ct)
    d["h_at_R1"] = h_subcritical(hg.R1, prm, ct)
    d["source"] = "formula"
    return d


def _solution(ctx, name, solve):
    rec = solve(ctx.m.params, ctx.ct, ctx.m.solver, grid=ctx.m.grid)
    ctx.records[name] = rec
    field_path = ctx.out / f"{name}.field"
    trace_path = ctx.out / f"{name}_trace.csv"
    write_field(field_path, rec.field)
    _write_csv(trace_path, TRACE_COLUMNS, rec.trace)
    d = rec.to_dict()
    d["source"] = "measured"
    d["grid"] = rec.field.grid.to_dict()
    d["files"] = {"field": field_path.name, "trace": trace_path.name}
    return d


def _task_local_min(ctx):
    d = _solution(ctx, "local_min", local_minimize)
    prm, ct = ctx.m.params, ctx.ct
    if ctx.m.regime is Regime.SUBCRITICAL_PAIR:
        hg = h_geometry(prm, ct)
        d["bounds"] = {"R0": hg.R0, "min_h_on_0_R0": hg.h_at_tmin, "source": "formula"}
    else:
        thr = critical_thresholds(prm, ct)
        d["bounds"] = {"rho_0": thr.rho_0, "source": "formula"}
    return d


def _task_mountain_pass(ctx):
    d = _solution(ctx, "mountain_pass", mountain_pass)
    hg = h_geometry(ctx.m.params, ctx.ct)
    d["bounds"] = {"h_at_tmax": hg.h_at_tmax, "source": "formula"}
    return d


def _task_critical_thresholds(ctx):
    d = critical_thresholds(ctx.m.params, ctx.ct).to_dict()
    d["a_limit"] = min(d["a0"], d["abar0"])
    d["source"] = "formula"
    return d


def _task_fiber_scan(ctx):
    """Fiber maps of the Gaussian seed and of every solution computed so far."""
    m = ctx.m
    grid = m.grid
    fields_ = {"seed": gaussian_seed(grid, m.params.a, min(1.0, grid.box_half_length / 6.0))}
    fields_.update({k: rec.field for k, rec in ctx.records.items()})
    out = {}
    for name, u in fields_.items():
        cf = fiber_coefficients(u, m.params)
        geo = ctx.geometry(cf)
        entry = {"coefficients": cf.to_dict(), "source": "measured"}
        if isinstance(geo, Exception):
            entry["geometry"] = None
            entry["error"] = f"{type(geo).__name__}: {geo}"
            lo, hi = -10.0, 10.0
        else:
            entry["geometry"] = geo.to_dict()
            span = geo.d_zero - geo.xi
            lo, hi = geo.xi - 0.5 * span - 1.0, geo.d_zero + 0.5 * span + 1.0
        t = np.linspace(lo, hi, 401)
        with np.errstate(over="ignore", invalid="ignore"):
            cols = [fiber_value_array(cf, t, m.params, order=k) for k in range(3)]
        path = ctx.out / f"fiber_scan_{name}.csv"
        _write_csv(path, ("t", "phi", "dphi", "d2phi"), zip(t, *cols))
        entry["file"] = path.name
        out[name] = entry
    return out


_RUNNERS = {
    "conditions": _task_conditions,
    "h_geometry": _task_h_geometry,
    "local_min": _task_local_min,
    "mountain_pass": _task_mountain_pass,
    "critical_thresholds": _task_critical_thresholds,
    "fiber_scan": _task_fiber_scan,
}


def run(m: RunManifest, output_dir=None) -> dict:
    """Execute the manifest's tasks in order and write the result bundle.

    Returns the summary.  Task errors are recorded there and do not stop
    later tasks; I/O errors propagate.
    """
    out = Path(output_dir if output_dir is not None else m.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    timings = {}
    entries = []
    header = {"manifest_hash": m.hash, "regime": m.regime.value}
    t0 = time.perf_counter()
    try:
        ct = resolve_constants(m)
        const_error = None
    except FracNLSError as exc:
        ct, const_error = None, f"{type(exc).__name__}: {exc}"
    timings["constants"] = time.perf_counter() - t0
    ctx = _Context(m, ct, out)
    for task in m.tasks:
        t0 = time.perf_counter()
        entry = {"task": task}
        if ct is None:
            entry.update(status="error", error=const_error)
        else:
            try:
                result = _RUNNERS[task](ctx)
            except FracNLSError as exc:
                entry.update(status="error", error=f"{type(exc).__name__}: {exc}")
            else:
                name = f"{task}.json"
                _write_json(out / name, {**header, "task": task, "result": result})
                entry.update(status="ok", file=name)
        timings[task] = time.perf_counter() - t0
        entries.append(entry)
    summary = {
        **header,
        "params": m.params.to_dict(),
        "constants": _constants_dict(ct) if ct else {"error": const_error},
        "tasks": entries,
        "ok": all(e["status"] == "ok" for e in entries),
    }
    summary_with_meta = {
        **summary,
        "metadata": {
            "wall_time_s": timings,
            "finished_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        },
    }
    _write_json(out / "summary.json", summary_with_meta)
    return summary_with_meta


# ---------------------------------------------------------------------------
# Sweep


SWEEP_COLUMNS = (
    "axis",
    "value",
    "status",
    "message",
    "A0_pass",
    "A0_margin",
    "A1_pass",
    "A1_margin",
    "A2_pass",
    "A2_margin",
    "h_geometry",
    "R0",
    "R1",
    "t_max",
    "a0",
    "abar0",
    "gamma",
    "gamma_lambda",
    "gamma_converged",
    "sigma",
    "sigma_lambda",
    "sigma_converged",
)


def _sweep_point(args) -> dict:
    """One swept value; returns a row dict.  Runs in a worker process."""
    base_doc, axis, value = args
    row = dict.fromkeys(SWEEP_COLUMNS)
    row.update(axis=axis, value=value)
    doc = json.loads(json.dumps(base_doc))
    doc["params"][axis] = value
    try:
        m = validate_manifest(doc)
    except ManifestError as exc:
        row.update(status="invalid", message="; ".join(f"{p}: {msg}" for p, msg in exc.errors))
        return row
    problems = []
    try:
        ct = resolve_constants(m)
    except FracNLSError as exc:
        row.update(status="error", message=f"constants: {exc}")
        return row
    prm = m.params
    rep = conditions_report(prm, ct)
    if m.regime is Regime.SUBCRITICAL_PAIR:
        for k in ("A0", "A1", "A2"):
            row[f"{k}_pass"] = rep[k]["pass"]
            row[f"{k}_margin"] = rep[k]["margin"]
        hg = rep["h_geometry"]
        row["h_geometry"] = "degenerate" if hg.get("degenerate") else "ok"
        row.update(R0=hg["R0"], R1=hg["R1"], t_max=hg["t_max"])
    else:
        row.update(a0=rep["critical"]["a0"], abar0=rep["critical"]["abar0"])
    for task, solve, prefix in (
        ("local_min", local_minimize, "gamma"),
        ("mountain_pass", mountain_pass, "sigma"),
    ):
        if task not in m.tasks:
            continue
        try:
            rec = solve(prm, ct, m.solver, grid=m.grid)
        except FracNLSError as exc:
            problems.append(f"{task}: {type(exc).__name__}: {exc}")
            continue
        row[prefix] = rec.energy_level
        row[f"{prefix}_lambda"] = rec.lambda_
        row[f"{prefix}_converged"] = rec.converged
    row.update(status="ok" if not problems else "partial", message="; ".join(problems) or None)
    return row


def sweep(spec: SweepSpec, output=None, workers: int | None = None) -> list[dict]:
    """Evaluate every swept value in a worker pool and write the CSV table.

    Rows keep the order of ``values``.  Values that break a parameter
    invariant become ``status=invalid`` rows with the validation messages.
    """
    jobs = [(spec.source["base"], spec.axis, v) for v in spec.values]
    workers = workers or os.cpu_count() or 1
    if workers == 1:
        rows = [_sweep_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    if output is None:
        output = Path(spec.base.output_dir) / f"sweep_{spec.axis}.csv"
    _write_csv(Path(output), SWEEP_COLUMNS, ([r[c] for c in SWEEP_COLUMNS] for r in rows))
    return rows
