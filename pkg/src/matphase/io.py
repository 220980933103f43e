"""Scenario configs, orchestration and dataset emission.

A config is one JSON document checked against ``schema/config.schema.json``
and then against the numerical preconditions of the module it drives. Only
a config that passes both is ever run.
"""
from __future__ import annotations

import copy
import csv
import json
import math
import os
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema
import numpy as np
from scipy.special import erfc

from . import __version__
from .dressed import dressed_phase_record, instantaneous_dressed_frequencies, mixing_functions
from .experiments import (DoubleSlitConfig, RamseyPulse, harmonic_eigenstates, run_double_slit,
                          run_ramsey_scan, run_wavepacket_interferogram)
from .field import Envelope, PulsedField
from .hydro import (FREE, Grid, PotentialSpec, Wavefunction1D, check_aliasing, free_gaussian_width, gaussian_packet,
                    histogram_tv_distance, integrate_trajectories, polar_decompose, propagate, local_residuals,
                    superpose)
from .twolevel import RESOLUTION_LIMIT, TwoLevelSystem, integrate_tdse, resolution_product, _time_grid

SCENARIOS = ("rabi", "dressed", "ramsey", "madelung", "doubleslit", "trajectories", "interferogram")
FORMATS = ("csv", "json")
OUTPUT_ENV = "MATPHASE_OUTPUT_DIR"
BOUNDARY_LEAK = 1e-8
RESOLUTION_RULE = f"dt·max(ω_e, Ω_R, |Δ|) ≤ {RESOLUTION_LIMIT}"


class ConfigError(ValueError):
    """Invalid configuration; ``path`` locates the offending entry."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ScenarioError(RuntimeError):
    """A module failed while running a validated scenario."""


# --------------------------------------------------------------------------
# schema and defaults

def load_schema() -> dict:
    text = resources.files("matphase").joinpath("schema/config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _resolve(schema: dict, root: dict) -> dict:
    ref = schema.get("$ref")
    if ref:
        node = root
        for part in ref.lstrip("#/").split("/"):
            node = node[part]
        return node
    return schema


def _apply_defaults(instance: dict, schema: dict, root: dict) -> None:
    schema = _resolve(schema, root)
    for key, sub in schema.get("properties", {}).items():
        sub = _resolve(sub, root)
        if key not in instance and "default" in sub:
            instance[key] = copy.deepcopy(sub["default"])
        elif key not in instance and sub.get("type") == "object" and not sub.get("required"):
            instance[key] = {}
        if isinstance(instance.get(key), dict) and sub.get("type") == "object":
            _apply_defaults(instance[key], sub, root)


def _schema_path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    return "/".join(parts) if parts else "<root>"


def _describe(err: jsonschema.ValidationError) -> str:
    if err.validator == "additionalProperties":
        allowed = set(err.schema.get("properties", {}))
        extra = sorted(set(err.instance) - allowed)
        return f"unknown key(s) {', '.join(repr(k) for k in extra)}"
    return err.message


# --------------------------------------------------------------------------
# config

@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    params: dict  # the full document with defaults applied
    seed: int = 0
    output_prefix: str = ""
    output_format: str = "csv"
    source: str | None = None

    def block(self, name: str) -> dict:
        return self.params.get(name, {})

    @property
    def numerics(self) -> dict:
        return self.block("numerics")

    def to_dict(self) -> dict:
        return copy.deepcopy(self.params)


def parse_config(document: Mapping[str, Any], source: str | None = None) -> ScenarioConfig:
    """Validate a decoded document (schema, then module preconditions)."""
    schema = load_schema()
    doc = copy.deepcopy(dict(document))
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(_describe(err), _schema_path(err))
    _apply_defaults(doc, schema, schema)
    out = doc.setdefault("output", {})
    out.setdefault("prefix", doc["scenario"])
    cfg = ScenarioConfig(doc["scenario"], doc, doc["seed"], out["prefix"], out["format"], source)
    _check_preconditions(cfg)
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}", str(path)) from exc
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object", str(path))
    return parse_config(doc, str(path))


# --------------------------------------------------------------------------
# builders shared by validation and execution

def _require(cfg: ScenarioConfig, *keys: str) -> None:
    for key in keys:
        node: Any = cfg.params
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"required for scenario {cfg.scenario!r}", key.replace(".", "/"))
            node = node[part]


def _build(where: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc), where) from exc


def build_system(cfg: ScenarioConfig) -> TwoLevelSystem:
    return _build("system", TwoLevelSystem, **cfg.block("system"))


def build_field(cfg: ScenarioConfig) -> PulsedField:
    f = cfg.block("field")
    env = _build("field/envelope", Envelope, **f.get("envelope", {}))
    return _build("field", PulsedField, env, f["carrier_frequency"], f["cep"], tuple(f["phase_coefficients"]))


def build_grid(cfg: ScenarioConfig) -> Grid:
    num = cfg.numerics
    n, length = num["N"], num["length"]
    if "dx" in num and not math.isclose(num["dx"], length / n, rel_tol=1e-12):
        raise ConfigError(f"dx = {num['dx']} must equal length / N = {length / n}", "numerics/dx")
    return _build("numerics/N", Grid.centered, n, length)


def _time_steps(cfg: ScenarioConfig) -> tuple[np.ndarray, float]:
    num = cfg.numerics
    if not num["t_final"] > num["t_start"]:
        raise ConfigError("t_final > t_start violated", "numerics/t_final")
    times = _build("numerics/dt", _time_grid, (num["t_start"], num["t_final"]), num["dt"])
    return times, num["dt"]


def build_packet(cfg: ScenarioConfig, grid: Grid) -> tuple[Wavefunction1D, PotentialSpec]:
    wp = cfg.block("wavepacket")
    pot = wp.get("potential", {"kind": "free"})
    potential = _build("wavepacket/potential", PotentialSpec, pot.get("kind", "free"), pot.get("params", {}))
    psi = gaussian_packet(grid, wp["sigma"], wp["x0"], wp["k0"], wp["mass"])
    return psi, potential


def build_doubleslit(cfg: ScenarioConfig) -> DoubleSlitConfig:
    d = cfg.block("doubleslit")
    return _build("doubleslit", DoubleSlitConfig, d["separation"], d["sigma"], d["alpha"], d["p_kick"],
                  d["time"], d["mass"])


def _boundary_leak(cfg: ScenarioConfig, grid: Grid) -> float:
    """Probability outside the box: analytic for a free packet at t_final, else initial tails."""
    wp = cfg.block("wavepacket")
    kind = wp.get("potential", {}).get("kind", "free")
    half = 0.5 * grid.length
    center = grid.x_min + half
    if kind == "free":
        t = cfg.numerics["t_final"]
        width = float(free_gaussian_width(wp["sigma"], t, wp["mass"]))
        ends = [wp["x0"], wp["x0"] + wp["k0"] * t / wp["mass"]]
        reach = max(abs(e - center) for e in ends)
        return float(erfc((half - reach) / (np.sqrt(2) * width)))
    return float(erfc((half - abs(wp["x0"] - center)) / (np.sqrt(2) * wp["sigma"])))


def _range(block: dict) -> np.ndarray:
    return np.linspace(block["start"], block["stop"], block["num"])


def _check_preconditions(cfg: ScenarioConfig) -> None:
    s = cfg.scenario
    num = cfg.numerics
    if s in ("rabi", "dressed"):
        _require(cfg, "system", "field", "numerics.dt", "numerics.t_final")
        system, fld = build_system(cfg), build_field(cfg)
        times, dt = _time_steps(cfg)
        r = resolution_product(system, fld, times, dt)
        if r > RESOLUTION_LIMIT:
            raise ConfigError(f"{RESOLUTION_RULE} violated (dt·max = {r:.4g})", "numerics/dt")
        init = cfg.block("initial_state")
        a, b = init.get("ground", 1.0), init.get("excited", 0.0)
        if a * a + b * b > 1 + 1e-12:
            raise ConfigError("ground² + excited² ≤ 1 violated", "initial_state")
    elif s == "ramsey":
        _require(cfg, "system", "ramsey")
        build_system(cfg)
        r = cfg.block("ramsey")
        delays = _range(r["delays"])
        if np.any(delays <= r["pulse_duration"]):
            raise ConfigError(f"delay > pulse_duration = {r['pulse_duration']} violated (pulses overlap)",
                              "ramsey/delays")
        if r["mode"] == "full-TDSE" and r["carrier_frequency"] <= 0:
            raise ConfigError("carrier_frequency > 0 violated", "ramsey/carrier_frequency")
    elif s in ("madelung", "trajectories"):
        _require(cfg, "wavepacket", "numerics.dt", "numerics.t_final", "numerics.N", "numerics.length")
        grid = build_grid(cfg)
        psi, _ = build_packet(cfg, grid)
        _time_steps(cfg)
        if num["t_start"] != 0:
            raise ConfigError("propagated scenarios start at t = 0", "numerics/t_start")
        _build("wavepacket", check_aliasing, psi)
        leak = _boundary_leak(cfg, grid)
        if leak > BOUNDARY_LEAK:
            raise ConfigError(f"boundary probability < {BOUNDARY_LEAK} violated ({leak:.2e}); "
                              "enlarge numerics/length", "numerics/length")
        if s == "trajectories" and num["n_traj"] < 1:
            raise ConfigError("n_traj ≥ 1 violated", "numerics/n_traj")
    elif s == "doubleslit":
        _require(cfg, "doubleslit")
        ds = build_doubleslit(cfg)
        grid = build_grid(cfg) if "N" in num else ds.default_grid()
        if ds.fringe_spacing < 8 * grid.dx:
            raise ConfigError(f"fringe spacing ≥ 8·dx violated ({ds.fringe_spacing:.4g} < {8 * grid.dx:.4g})",
                              "numerics")
    elif s == "interferogram":
        _require(cfg, "interferogram", "numerics.N", "numerics.length")
        grid = build_grid(cfg)
        it = cfg.block("interferogram")
        _build("interferogram/n_states", harmonic_eigenstates, grid, it["n_states"], it["omega"], it["mass"])


# --------------------------------------------------------------------------
# emission

def _format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _columns(dataset: Mapping[str, Any]) -> tuple[list[str], list[np.ndarray]]:
    names = list(dataset)
    cols = [np.atleast_1d(np.asarray(dataset[k])) for k in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValueError(f"columns differ in length: {sorted(lengths)}")
    return names, cols


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return v if math.isfinite(v) else None


def emit_series(dataset: Mapping[str, Any], fmt: str, path, metadata: Mapping[str, Any] | None = None) -> Path:
    """Write named, equal-length columns as CSV or as a JSON array of records.

    CSV floats carry 17 significant digits so every value reads back
    exactly. ``metadata`` becomes ``# key=value`` rows above the CSV header
    (ignored for JSON, whose run context lives in the manifest).
    """
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    path = Path(path)
    names, cols = _columns(dataset)
    n = len(cols[0]) if cols else 0
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if fmt == "csv":
                for key, val in (metadata or {}).items():
                    fh.write(f"# {key}={json.dumps(val, sort_keys=True)}\n")
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(names)
                for i in range(n):
                    w.writerow([_format_value(c[i]) for c in cols])
            else:
                records = [{k: _json_value(c[i]) for k, c in zip(names, cols)} for i in range(n)]
                json.dump(records, fh, indent=1)
                fh.write("\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    """Inverse of ``emit_series`` for CSV files (metadata rows skipped)."""
    with open(path, encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows:
        return {}
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(header)}


# --------------------------------------------------------------------------
# running

@dataclass
class RunManifest:
    config: dict
    version: str
    duration_s: float
    outputs: list[str]
    summary: dict
    scenario: str = ""
    seed: int = 0

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed, "version": self.version,
                "duration_s": self.duration_s, "outputs": self.outputs,
                "summary": self.summary, "config": self.config}


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "."))


class _Writer:
    def __init__(self, cfg: ScenarioConfig, out_dir: Path):
        self.cfg = cfg
        self.dir = out_dir
        self.files: list[str] = []

    def series(self, suffix: str, data: Mapping[str, Any], metadata=None) -> None:
        name = f"{self.cfg.output_prefix}{suffix}.{self.cfg.output_format}"
        emit_series(data, self.cfg.output_format, self.dir / name, metadata)
        self.files.append(name)

    def record(self, suffix: str, record: Mapping[str, Any]) -> None:
        name = f"{self.cfg.output_prefix}{suffix}.json"
        with open(self.dir / name, "w", encoding="utf-8") as fh:
            json.dump({k: _json_value(v) if not isinstance(v, (str, list, dict)) else v
                       for k, v in record.items()}, fh, indent=1, sort_keys=True)
            fh.write("\n")
        self.files.append(name)


def _initial(cfg: ScenarioConfig):
    init = cfg.block("initial_state")
    return init.get("ground", 1.0), init.get("excited", 0.0)


def _run_rabi(cfg: ScenarioConfig, out: _Writer) -> dict:
    system, fld = build_system(cfg), build_field(cfg)
    num = cfg.numerics
    tr = integrate_tdse(system, fld, _initial(cfg), (num["t_start"], num["t_final"]), num["dt"], rwa=num["rwa"])
    pg, pe = tr.populations
    out.series("", {"t": tr.times, "P_g": pg, "P_e": pe, "Re_c_g": tr.c_g.real, "Im_c_g": tr.c_g.imag,
                    "Re_c_e": tr.c_e.real, "Im_c_e": tr.c_e.imag,
                    "phase_g": tr.unwrapped_phase_g, "phase_e": tr.unwrapped_phase_e})
    return {"max_population_e": float(pe.max()), "final_population_e": float(pe[-1]),
            "final_norm": float(tr.norm[-1])}


def _run_dressed(cfg: ScenarioConfig, out: _Writer) -> dict:
    system, fld = build_system(cfg), build_field(cfg)
    times, _ = _time_steps(cfg)
    ic = cfg.block("dressed").get("initial_condition", "ground")
    freqs = instantaneous_dressed_frequencies(system, fld, times)
    mix = mixing_functions(freqs)
    rec = dressed_phase_record(system, fld, times, ic)
    out.series("", {"t": times, "Re_omega_G": freqs.omega_G.real, "Im_omega_G": freqs.omega_G.imag,
                    "Re_omega_E": freqs.omega_E.real, "Im_omega_E": freqs.omega_E.imag,
                    "cos_half": mix.cos_half.real, "sin_half": mix.sin_half.real,
                    "phi_Gr": rec.phi_Gr, "phi_Gv": rec.phi_Gv, "phi_Er": rec.phi_Er, "phi_Ev": rec.phi_Ev,
                    "phi_NAD": rec.phi_nad, "phi_F": rec.phi_F})
    return {"final_phi_NAD": float(rec.phi_nad[-1]), "final_phi_Gr": float(rec.phi_Gr[-1]),
            "final_phi_Er": float(rec.phi_Er[-1]), "initial_condition": ic}


def _run_ramsey(cfg: ScenarioConfig, out: _Writer) -> dict:
    system = build_system(cfg)
    r = cfg.block("ramsey")
    pulse = RamseyPulse(r["pulse_duration"], r["carrier_frequency"], r["cep"])
    phases = np.asarray(r["relative_phases"], dtype=float)
    scan = run_ramsey_scan(system, pulse, _range(r["delays"]), phases, r["mode"])
    data = {"delay": scan.delays}
    for j, dphi in enumerate(phases):
        data[f"P_e[dphi={float(dphi)!r}]"] = scan.populations[:, j]
    out.series("", data, metadata={"scenario": "ramsey", "mode": r["mode"], "seed": cfg.seed,
                                   "relative_phases": phases.tolist(), "system": cfg.block("system")})
    summary: dict[str, Any] = {"mode": r["mode"]}
    try:
        fit = scan.fringe(0)
        offsets = scan.fringe_offsets()
        out.record("_fit", {**fit.as_dict(), "fringe_offsets": offsets.tolist()})
        summary.update(fringe_period=fit.period, fringe_phase=fit.phase, fringe_offsets=offsets.tolist())
    except ValueError as exc:
        summary["fit_error"] = str(exc)
    return summary


def _frames(cfg: ScenarioConfig):
    grid = build_grid(cfg)
    psi, potential = build_packet(cfg, grid)
    num = cfg.numerics
    steps = int(round(num["t_final"] / num["dt"]))
    return propagate(psi, potential, num["dt"], steps, every=num["every"]), potential


def _run_madelung(cfg: ScenarioConfig, out: _Writer) -> dict:
    frames, potential = _frames(cfg)
    f = polar_decompose(frames[-1])
    psi = frames[-1].values
    out.series("", {"x": f.x, "Re_psi": psi.real, "Im_psi": psi.imag, "R": f.R, "S": f.S,
                    "U": f.U, "v": f.v, "mask": f.node_mask})
    summary = {"final_time": frames[-1].time, "sigma_final": frames[-1].moments()[1]}
    norms = [local_residuals(f, potential, cfg.numerics["dt"]) for f in frames[1:]]
    summary.update(hj_residual_max=max(n[0] for n in norms), continuity_residual_max=max(n[1] for n in norms))
    return summary


def _run_trajectories(cfg: ScenarioConfig, out: _Writer) -> dict:
    frames, _ = _frames(cfg)
    fields = [polar_decompose(f) for f in frames]
    ens = integrate_trajectories(fields, cfg.numerics["n_traj"], seed=cfg.seed)
    data = {"t": ens.times}
    for i in range(ens.positions.shape[0]):
        data[f"x{i}"] = ens.positions[i]
    out.series("", data)
    tv = [histogram_tv_distance(ens.positions[:, k], fields[k]) for k in range(len(fields))]
    ordered = bool(np.all(np.diff(ens.positions, axis=0) >= 0))
    return {"max_tv_distance": float(max(tv)), "order_preserved": ordered,
            "wrapped": int(ens.wrapped.sum())}


def _run_doubleslit(cfg: ScenarioConfig, out: _Writer) -> dict:
    ds = build_doubleslit(cfg)
    grid = build_grid(cfg) if "N" in cfg.numerics else None
    res = run_double_slit(ds, grid)
    out.series("", {"x": res.x, "density": res.density, "left": res.left_density, "right": res.right_density})
    fit = res.fit()
    out.record("_fit", fit.as_dict())
    summary = {"fringe_phase": fit.phase, "fringe_period": fit.period, "expected_period": ds.fringe_spacing,
               "visibility": fit.visibility, "overlap_visibility": res.overlap_visibility}
    n_traj = cfg.numerics.get("n_traj", 0)
    if n_traj:
        frames = [polar_decompose(f) for f in _double_slit_frames(ds, res.state.grid)]
        ens = integrate_trajectories(frames, n_traj, seed=cfg.seed)
        out.series("_trajectories", {"t": ens.times, **{f"x{i}": ens.positions[i] for i in range(n_traj)}})
        summary["trajectory_tv_distance"] = histogram_tv_distance(ens.positions[:, -1], frames[-1])
    return summary


def _double_slit_frames(ds: DoubleSlitConfig, grid: Grid, n_frames: int = 200):
    packets = [gaussian_packet(grid, ds.sigma, x0, k0, ds.mass, ph, ds.hbar) for x0, k0, ph in ds.branches()]
    both = superpose([(1.0, packets[0]), (1.0, packets[1])])
    return propagate(both, FREE, ds.time / n_frames, n_frames)


def _run_interferogram(cfg: ScenarioConfig, out: _Writer) -> dict:
    it = cfg.block("interferogram")
    grid = build_grid(cfg)
    window = tuple(it["window"]) if "window" in it else None
    res = run_wavepacket_interferogram(grid, it["omega"], it["n_states"], it["displacement"],
                                       _range(it["delays"]), it["relative_phase"], window, it["mass"])
    out.series("", {"tau": res.delays, "signal": res.signal})
    return {"period": res.period, "max_signal": float(res.signal.max()), "min_signal": float(res.signal.min())}


RUNNERS = {"rabi": _run_rabi, "dressed": _run_dressed, "ramsey": _run_ramsey, "madelung": _run_madelung,
           "trajectories": _run_trajectories, "doubleslit": _run_doubleslit, "interferogram": _run_interferogram}


def run_scenario(cfg: ScenarioConfig, output_dir=None) -> RunManifest:
    """Run a validated config; datasets first, manifest last."""
    out_dir = Path(output_dir) if output_dir is not None else default_output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    writer = _Writer(cfg, out_dir)
    start = time.perf_counter()
    try:
        summary = RUNNERS[cfg.scenario](cfg, writer)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        raise ScenarioError(f"scenario {cfg.scenario!r} failed: {exc}") from exc
    manifest_name = f"{cfg.output_prefix}_manifest.json"
    manifest = RunManifest(cfg.to_dict(), __version__, time.perf_counter() - start,
                           writer.files + [manifest_name], summary, cfg.scenario, cfg.seed)
    with open(out_dir / manifest_name, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=1, sort_keys=True, default=_json_value)
        fh.write("\n")
    return manifest
