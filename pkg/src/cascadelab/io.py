"""Versioned file formats and run manifests.

Every JSON document carries a ``schema`` field; loaders reject unknown
versions instead of guessing.  Trajectories are CSV (shortest round-trip
decimal text, so a repeated run is byte-identical) with a JSON sidecar for
status; field snapshots are raw little-endian float64 with a JSON sidecar.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass

import numpy as np

from .cascade import CascadeConfig, CascadeTrajectory, N_SPECIES
from .grid import GridField
from .tensor import CoefficientTensor

SCHEMA_CONFIG = "cascade-config/1"
SCHEMA_TRAJECTORY = "trajectory-sidecar/1"
SCHEMA_SNAPSHOT = "field-snapshot/1"
SCHEMA_BASIS = "basis-config/1"
SCHEMA_PARAMS = "regularity-params/1"
SCHEMA_REPORT = "covering-report/1"
SCHEMA_MANIFEST = "run-manifest/1"

TOOL_VERSION = "cascadelab 0.1.0"


class InputError(Exception):
    """Unreadable, unparsable, or wrong-schema input (CLI exit code 2)."""


class DomainError(Exception):
    """Well-formed input violating a domain constraint (CLI exit code 1)."""


def canonical_digest(obj) -> str:
    payload = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def load_json(path, expected_schema: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a JSON object")
    schema = doc.get("schema")
    if schema != expected_schema:
        raise InputError(f"{path}: schema {schema!r}, expected {expected_schema!r}")
    return doc


def dump_json(doc: dict, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# cascade config


def config_to_dict(config: CascadeConfig, integrator: dict | None = None) -> dict:
    doc = {
        "schema": SCHEMA_CONFIG,
        "lambda": config.lam,
        "alpha": config.alpha,
        "kappa": config.kappa,
        "n_min": config.n_min,
        "n_max": config.n_max,
        "tensor": config.tensor.as_rows(),
    }
    if integrator:
        doc["integrator"] = dict(integrator)
    return doc


def parse_config(doc: dict) -> tuple[CascadeConfig, dict]:
    """Build a config from a parsed document; constraint issues are DomainError."""
    try:
        tensor = CoefficientTensor.from_rows(doc.get("tensor", []))
        config = CascadeConfig(
            lam=float(doc["lambda"]), alpha=float(doc["alpha"]),
            n_min=int(doc["n_min"]), n_max=int(doc["n_max"]),
            kappa=float(doc.get("kappa", 1.0)), tensor=tensor,
            check_tensor=False)
    except (KeyError, TypeError) as exc:
        raise InputError(f"config document incomplete: {exc}") from exc
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    integrator = doc.get("integrator", {})
    if not isinstance(integrator, dict):
        raise InputError("integrator block must be an object")
    return config, integrator


def load_cascade_config(path) -> tuple[CascadeConfig, dict]:
    return parse_config(load_json(path, SCHEMA_CONFIG))


# ---------------------------------------------------------------------------
# trajectories


def trajectory_columns(config: CascadeConfig) -> list[str]:
    return ["t"] + [f"X_{i}_{n}" for i in range(1, N_SPECIES + 1)
                    for n in range(config.n_min, config.n_max + 1)]


def save_trajectory_csv(trajectory: CascadeTrajectory, config: CascadeConfig,
                        path, sidecar: dict | None = None):
    cols = trajectory_columns(config)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for s in trajectory.samples:
            row = [repr(float(s.t))] + [repr(float(v)) for v in s.X.ravel()]
            fh.write(",".join(row) + "\n")
    doc = {
        "schema": SCHEMA_TRAJECTORY,
        "status": trajectory.status,
        "blowup_time_estimate": trajectory.blowup_time_estimate,
        "n_samples": len(trajectory.samples),
        "columns": cols,
        "n_min": config.n_min,
        "n_max": config.n_max,
    }
    doc.update(sidecar or {})
    dump_json(doc, str(path) + ".json")


def load_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray, dict]:
    """Times, stacked states (n_samples, 4, n_shells), and the sidecar."""
    sidecar = load_json(str(path) + ".json", SCHEMA_TRAJECTORY)
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise InputError(f"malformed trajectory CSV {path}: {exc}") from exc
    n_min, n_max = int(sidecar["n_min"]), int(sidecar["n_max"])
    n_shells = n_max - n_min + 1
    if raw.shape[1] != 1 + N_SPECIES * n_shells:
        raise InputError(f"{path}: column count does not match the sidecar window")
    times = raw[:, 0]
    states = raw[:, 1:].reshape(len(raw), N_SPECIES, n_shells)
    return times, states, sidecar


# ---------------------------------------------------------------------------
# field snapshots


def save_snapshot(fld: GridField, path_base, basis_id: str = "",
                  extra: dict | None = None) -> tuple[str, str]:
    raw_path = str(path_base) + ".raw"
    fld.data.astype("<f8").tofile(raw_path)
    doc = {
        "schema": SCHEMA_SNAPSHOT,
        "n_grid": fld.n_grid,
        "box_size": fld.box_size,
        "components": fld.n_components,
        "time": fld.time_tag,
        "basis_id": basis_id,
    }
    doc.update(extra or {})
    json_path = str(path_base) + ".json"
    dump_json(doc, json_path)
    return raw_path, json_path


def load_snapshot(path_base) -> GridField:
    doc = load_json(str(path_base) + ".json", SCHEMA_SNAPSHOT)
    n = int(doc["n_grid"])
    comps = int(doc["components"])
    try:
        data = np.fromfile(str(path_base) + ".raw", dtype="<f8")
    except OSError as exc:
        raise InputError(f"cannot read {path_base}.raw: {exc}") from exc
    if data.size != comps * n ** 3:
        raise InputError(f"{path_base}.raw: size does not match the sidecar")
    fld = GridField(data.reshape(comps, n, n, n),
                    float(doc["box_size"]), doc.get("time"))
    fld.meta["basis_id"] = doc.get("basis_id", "")
    return fld


# ---------------------------------------------------------------------------
# run manifests


@dataclass
class RunManifest:
    subcommand: str
    config_digest: str
    parameters: dict
    inputs: list[str]
    outputs: list[str]
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_MANIFEST,
            "tool_version": TOOL_VERSION,
            "subcommand": self.subcommand,
            "config_digest": self.config_digest,
            "parameters": self.parameters,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "wall_time_s": self.wall_time_s,
        }

    @property
    def digest(self) -> str:
        """Identity of the computation: inputs and parameters only.

        Wall time and output destinations never change what was computed,
        so they stay outside the digest.
        """
        doc = self.to_dict()
        doc.pop("wall_time_s")
        doc.pop("outputs")
        return canonical_digest(doc)


class ManifestClock:
    def __init__(self):
        self.start = time.monotonic()

    def elapsed(self) -> float:
        return time.monotonic() - self.start
