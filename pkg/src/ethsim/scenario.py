"""Scenario files: strict JSON, unknown keys rejected, complex entries as
[re, im] pairs.  A scenario pins everything a run needs: chain dimensions,
step gates, the initial system state, the recorded quantity, thresholds and
the seed, so identical files reproduce identical traces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .chain import (
    ChainModel,
    DIMENSION_CAP,
    build_gate,
    chain_initial_state,
    system_density,
)
from .errors import ParseError, ValidationError
from .indirect import NdmScenario
from .linalg import SIGMA_Z
from .recording import PhysicalQuantity, probe_pointer_quantity
from .states import State

_TOP_KEYS = {
    "name",
    "system_dim",
    "probe_dim",
    "horizon",
    "gates",
    "initial_state",
    "quantity",
    "conserved",
    "thresholds",
    "seed",
    "runs",
    "steps",
    "jumps",
    "theta_filter",
}
_GATE_KEYS = {"name", "control_states", "phi", "theta", "readout_phi", "entries"}
_THRESHOLD_KEYS = {"svd_tol", "weight_eps", "delta"}
_JUMPS_KEYS = {"drift_angle", "window"}
_QUANTITY_KEYS = {"name", "site", "spectrum", "projections"}

DEFAULT_THRESHOLDS = {"svd_tol": 1e-9, "weight_eps": 1e-8, "delta": 1e-3}


@dataclass(frozen=True)
class Thresholds:
    svd_tol: float = 1e-9
    weight_eps: float = 1e-8
    delta: float = 1e-3


@dataclass(frozen=True)
class Scenario:
    name: str
    system_dim: int
    probe_dim: int
    horizon: int
    gates: tuple[dict, ...]
    initial_state: object  # named string or system density entries
    quantity: dict
    conserved: object
    thresholds: Thresholds
    seed: int
    runs: int = 100
    steps: int | None = None
    jumps: dict = field(default_factory=dict)
    theta_filter: float = 0.0


def _reject_unknown(mapping: dict, allowed: set, where: str):
    unknown = set(mapping) - allowed
    if unknown:
        raise ValidationError(f"unknown keys in {where}: {sorted(unknown)}")


def _parse_complex_matrix(entries, what: str) -> np.ndarray:
    try:
        arr = np.asarray(entries, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what}: entries must be [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != 2:
        raise ValidationError(f"{what}: expected an NxNx2 nest of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _emit_complex_matrix(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m)]


def parse_scenario_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ValidationError("scenario document must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "scenario")
    for key in ("name", "system_dim", "probe_dim", "horizon", "gates"):
        if key not in doc:
            raise ValidationError(f"missing required key '{key}'")
    s = int(doc["system_dim"])
    p = int(doc["probe_dim"])
    horizon = int(doc["horizon"])
    if s < 1:
        raise ValidationError("system_dim must be >= 1")
    if p < 1:
        raise ValidationError("probe_dim must be >= 1")
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    if s * p**horizon > DIMENSION_CAP:
        raise ValidationError(
            f"full dimension {s * p ** horizon} exceeds the cap {DIMENSION_CAP}"
        )
    gates = []
    raw_gates = doc["gates"]
    if not isinstance(raw_gates, list) or len(raw_gates) != horizon:
        raise ValidationError("gates must list one entry per step")
    for k, g in enumerate(raw_gates):
        if not isinstance(g, dict) or "name" not in g:
            raise ValidationError(f"gate {k + 1} must be an object with a 'name'")
        _reject_unknown(g, _GATE_KEYS, f"gate {k + 1}")
        gates.append(dict(g))
    initial = doc.get("initial_state", "ground")
    if isinstance(initial, dict):
        _reject_unknown(initial, {"system_entries"}, "initial_state")
        _parse_complex_matrix(initial["system_entries"], "initial_state")
    elif not isinstance(initial, str):
        raise ValidationError("initial_state must be a name or explicit entries")
    quantity = doc.get("quantity", {"name": "probe_z", "site": 1})
    _reject_unknown(quantity, _QUANTITY_KEYS, "quantity")
    conserved = doc.get("conserved", "system_z")
    if isinstance(conserved, dict):
        _reject_unknown(conserved, {"entries"}, "conserved")
        _parse_complex_matrix(conserved["entries"], "conserved")
    thr = dict(DEFAULT_THRESHOLDS)
    raw_thr = doc.get("thresholds", {})
    _reject_unknown(raw_thr, _THRESHOLD_KEYS, "thresholds")
    thr.update({k: float(v) for k, v in raw_thr.items()})
    jumps = doc.get("jumps", {})
    _reject_unknown(jumps, _JUMPS_KEYS, "jumps")
    return Scenario(
        name=str(doc["name"]),
        system_dim=s,
        probe_dim=p,
        horizon=horizon,
        gates=tuple(gates),
        initial_state=initial,
        quantity=dict(quantity),
        conserved=conserved,
        thresholds=Thresholds(**thr),
        seed=int(doc.get("seed", 0)),
        runs=int(doc.get("runs", 100)),
        steps=int(doc["steps"]) if "steps" in doc else None,
        jumps=dict(jumps),
        theta_filter=float(doc.get("theta_filter", 0.0)),
    )


def parse_scenario(path) -> Scenario:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    try:
        return parse_scenario_dict(doc)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def emit_scenario(scn: Scenario) -> dict:
    doc = {
        "name": scn.name,
        "system_dim": scn.system_dim,
        "probe_dim": scn.probe_dim,
        "horizon": scn.horizon,
        "gates": [dict(g) for g in scn.gates],
        "initial_state": scn.initial_state
        if isinstance(scn.initial_state, str)
        else {"system_entries": scn.initial_state["system_entries"]},
        "quantity": dict(scn.quantity),
        "conserved": scn.conserved
        if isinstance(scn.conserved, str)
        else {"entries": scn.conserved["entries"]},
        "thresholds": {
            "svd_tol": scn.thresholds.svd_tol,
            "weight_eps": scn.thresholds.weight_eps,
            "delta": scn.thresholds.delta,
        },
        "seed": scn.seed,
        "runs": scn.runs,
    }
    if scn.steps is not None:
        doc["steps"] = scn.steps
    if scn.jumps:
        doc["jumps"] = dict(scn.jumps)
    if scn.theta_filter:
        doc["theta_filter"] = scn.theta_filter
    return doc


# ---------------------------------------------------------------------------
# builders


def system_state_of(scn: Scenario) -> np.ndarray:
    if isinstance(scn.initial_state, str):
        return system_density(scn.initial_state, scn.system_dim)
    return _parse_complex_matrix(
        scn.initial_state["system_entries"], "initial_state"
    )


def conserved_of(scn: Scenario) -> np.ndarray:
    if isinstance(scn.conserved, str):
        if scn.conserved == "system_z":
            if scn.system_dim != 2:
                raise ValidationError("system_z requires system_dim = 2")
            return np.array(SIGMA_Z)
        raise ValidationError(f"unknown conserved quantity '{scn.conserved}'")
    return _parse_complex_matrix(scn.conserved["entries"], "conserved")


def quantity_of(scn: Scenario) -> PhysicalQuantity:
    q = scn.quantity
    site = int(q.get("site", 1))
    if q.get("name") == "probe_z" or "projections" not in q:
        return probe_pointer_quantity(scn.system_dim, scn.probe_dim, site)
    projections = [
        _parse_complex_matrix(p, "quantity projection") for p in q["projections"]
    ]
    return PhysicalQuantity(
        name=str(q.get("name", "custom")),
        spectrum=tuple(float(v) for v in q["spectrum"]),
        projections=tuple(projections),
        site=site,
    )


def build_model(scn: Scenario) -> ChainModel:
    gates = []
    for g in scn.gates:
        params = {k: v for k, v in g.items() if k != "name"}
        if "entries" in params:
            params["entries"] = _parse_complex_matrix(
                params["entries"], "explicit gate"
            )
        gates.append(build_gate(g["name"], scn.system_dim, scn.probe_dim, params))
    rho_s = system_state_of(scn)
    init = chain_initial_state(rho_s, scn.system_dim, scn.probe_dim, scn.horizon)
    return ChainModel(scn.system_dim, scn.probe_dim, scn.horizon, gates, init)


def build_ndm(scn: Scenario, runs: int | None = None, steps: int | None = None) -> NdmScenario:
    params = {k: v for k, v in scn.gates[0].items() if k != "name"}
    if "entries" in params:
        params["entries"] = _parse_complex_matrix(params["entries"], "explicit gate")
    gate = build_gate(scn.gates[0]["name"], scn.system_dim, scn.probe_dim, params)
    return NdmScenario(
        system_dim=scn.system_dim,
        probe_dim=scn.probe_dim,
        gate=gate,
        conserved=conserved_of(scn),
        quantity=quantity_of(scn),
        initial_system=State(system_state_of(scn)),
        runs=scn.runs if runs is None else runs,
        steps=(scn.steps or 25) if steps is None else steps,
        weight_eps=scn.thresholds.weight_eps,
    )


def bundled_scenario_path(name: str) -> Path:
    """Resolve a shipped scenario by bare name (e.g. 'cnot')."""
    pkg = resources.files("ethsim") / "scenarios" / f"{name}.json"
    if not pkg.is_file():
        raise ValidationError(f"no bundled scenario named '{name}'")
    return Path(str(pkg))


def resolve_scenario(spec: str) -> Scenario:
    path = Path(spec)
    if path.is_file():
        return parse_scenario(path)
    if spec.endswith(".json"):
        raise ParseError(f"scenario file not found: {spec}")
    return parse_scenario(bundled_scenario_path(spec))
