"""Batch pipeline: validate, simulate, synthesize, analyze.

Each ``run_*`` function is deterministic given identical inputs, writes a
run manifest next to its outputs, and stamps every sidecar with the
manifest digest so outputs can be traced to the invocation that produced
them.
"""

from __future__ import annotations

import os

import numpy as np

from . import io as iomod
from .integrate import integrate
from .regularity import RegularityParams, analyze_snapshots
from .tensor import validate_tensor
from .wavelets import build_wavelet_basis, project_coefficients, synthesize_field


def _finish_manifest(manifest: iomod.RunManifest, out_dir: str,
                     clock: iomod.ManifestClock) -> str:
    manifest.wall_time_s = clock.elapsed()
    digest = manifest.digest
    doc = manifest.to_dict()
    doc["digest"] = digest
    iomod.dump_json(doc, os.path.join(out_dir, "manifest.json"))
    return digest


def run_validate(config_path) -> tuple[int, str]:
    """Exit code and human-readable report for a config document."""
    try:
        config, _ = iomod.load_cascade_config(config_path)
    except iomod.InputError as exc:
        return 2, f"input error: {exc}"
    except iomod.DomainError as exc:
        return 1, f"domain violation: {exc}"
    report = validate_tensor(config.tensor)
    if report.valid:
        return 0, str(report)
    return 1, str(report)


def run_simulate(config_path, t_end: float, out_path) -> dict:
    """Integrate the configured system and write CSV + sidecar + manifest."""
    clock = iomod.ManifestClock()
    config, integrator = iomod.load_cascade_config(config_path)
    report = validate_tensor(config.tensor)
    if not report.valid:
        raise iomod.DomainError(str(report))
    if t_end <= 0:
        raise iomod.DomainError(f"t_end must be positive, got {t_end}")

    initial_entries = integrator.pop("initial", {"X_1_0": 1.0})
    initial = config.zero_state()
    for key, value in initial_entries.items():
        _, i_str, n_str = key.split("_")
        i, n = int(i_str), int(n_str)
        if not (1 <= i <= 4 and config.n_min <= n <= config.n_max):
            raise iomod.DomainError(f"initial entry {key} outside the window")
        initial.X[i - 1, n - config.n_min] = float(value)

    trajectory = integrate(config, initial, t_end, **integrator)

    out_dir = os.path.dirname(os.path.abspath(out_path)) or "."
    os.makedirs(out_dir, exist_ok=True)
    config_doc = iomod.config_to_dict(
        config, dict(integrator, initial=initial_entries))
    digest = iomod.canonical_digest(config_doc)
    manifest = iomod.RunManifest("simulate", digest,
                                 {"t_end": t_end, "integrator": integrator,
                                  "initial": initial_entries},
                                 [str(config_path)], [str(out_path)], 0.0)
    manifest_digest = _finish_manifest(manifest, out_dir, clock)
    iomod.save_trajectory_csv(trajectory, config, out_path, sidecar={
        "config_digest": digest, "manifest_digest": manifest_digest})
    return {"status": trajectory.status,
            "blowup_time_estimate": trajectory.blowup_time_estimate,
            "n_samples": len(trajectory.samples),
            "manifest_digest": manifest_digest}


def load_basis_config(path):
    doc = iomod.load_json(path, iomod.SCHEMA_BASIS)
    try:
        kwargs = {
            "lam": float(doc["lambda"]),
            "n_grid": int(doc["n_grid"]),
            "n_window": tuple(int(v) for v in doc["n_window"]),
            "base_scale": float(doc.get("base_scale", 4.0)),
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise iomod.InputError(f"basis config incomplete: {exc}") from exc
    try:
        return build_wavelet_basis(**kwargs)
    except ValueError as exc:
        raise iomod.DomainError(str(exc)) from exc


def run_synthesize(trajectory_path, basis_config_path, times, out_dir) -> dict:
    """Synthesize field snapshots at the requested times.

    Each time must lie inside the trajectory span; states are linearly
    interpolated between the two bracketing samples.  The worst
    round-trip coefficient recovery error across snapshots is recorded.
    """
    clock = iomod.ManifestClock()
    t_samples, states, sidecar = iomod.load_trajectory_csv(trajectory_path)
    basis = load_basis_config(basis_config_path)
    n_min, n_max = int(sidecar["n_min"]), int(sidecar["n_max"])
    if not basis.covers(n_min, n_max):
        raise iomod.DomainError(
            f"basis window {basis.n_window} does not cover shells "
            f"[{n_min}, {n_max}]")

    os.makedirs(out_dir, exist_ok=True)
    manifest = iomod.RunManifest(
        "synthesize", sidecar.get("config_digest", ""),
        {"times": list(times), "basis_id": basis.basis_id},
        [str(trajectory_path), str(basis_config_path)], [], 0.0)

    written = []
    max_roundtrip = 0.0
    for idx, t in enumerate(times):
        if not t_samples[0] <= t <= t_samples[-1]:
            raise iomod.DomainError(
                f"time {t} outside trajectory span "
                f"[{t_samples[0]}, {t_samples[-1]}]")
        coeffs = np.empty_like(states[0])
        for i in range(states.shape[1]):
            for n in range(states.shape[2]):
                coeffs[i, n] = np.interp(t, t_samples, states[:, i, n])
        fld = synthesize_field(coeffs, basis, n_min=n_min, time_tag=float(t))
        recovered = project_coefficients(fld, basis)
        lo = basis.n_window[0]
        window_slice = slice(n_min - lo, n_max - lo + 1)
        err = float(np.max(np.abs(recovered[:, window_slice] - coeffs)))
        max_roundtrip = max(max_roundtrip, err)
        base = os.path.join(out_dir, f"snapshot_{idx:04d}")
        iomod.save_snapshot(fld, base, basis_id=basis.basis_id, extra={
            "manifest_digest": "", "roundtrip_error": err,
            "n_min": n_min, "n_max": n_max})
        written.append(base)

    manifest.outputs = [w + ".raw" for w in written]
    manifest.parameters["max_roundtrip_error"] = max_roundtrip
    manifest_digest = _finish_manifest(manifest, out_dir, clock)
    for base in written:  # stamp sidecars with the final digest
        doc = iomod.load_json(base + ".json", iomod.SCHEMA_SNAPSHOT)
        doc["manifest_digest"] = manifest_digest
        iomod.dump_json(doc, base + ".json")
    return {"written": written, "max_roundtrip_error": max_roundtrip,
            "manifest_digest": manifest_digest}


def load_regularity_params(path) -> tuple[RegularityParams, dict]:
    doc = iomod.load_json(path, iomod.SCHEMA_PARAMS)
    try:
        params = RegularityParams(
            alpha=float(doc["alpha"]), epsilon=float(doc["epsilon"]),
            gamma=float(doc["gamma"]), K_threshold=float(doc["K_threshold"]),
            nuclear_depth=int(doc.get("nuclear_depth", 2)),
            window_exponent=int(doc.get("window_exponent", 10)),
            exponent_offset=doc.get("exponent_offset"),
            window_base=float(doc.get("window_base", 2.0)))
    except KeyError as exc:
        raise iomod.InputError(f"params document missing {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise iomod.DomainError(str(exc)) from exc
    return params, doc


def run_analyze(snapshot_dir, params_path, out_path, workers: int = 1) -> dict:
    """Classify cubes across levels and write the covering report.

    ``workers`` is validated and recorded; the classification itself runs
    in-process (it is already a deterministic fold over cubes).
    """
    clock = iomod.ManifestClock()
    if workers < 1:
        raise iomod.DomainError(f"workers must be >= 1, got {workers}")
    params, doc = load_regularity_params(params_path)
    levels = [int(j) for j in doc.get("levels", [2, 3, 4, 5])]

    bases = sorted(
        os.path.join(snapshot_dir, name[:-5])
        for name in os.listdir(snapshot_dir)
        if name.startswith("snapshot_") and name.endswith(".json"))
    if len(bases) < 3:
        raise iomod.DomainError(
            f"need at least 3 snapshots in {snapshot_dir}, found {len(bases)}")
    snapshots = [iomod.load_snapshot(base) for base in bases]
    snapshots.sort(key=lambda f: f.time_tag)

    report = analyze_snapshots(snapshots, params, levels)

    out_dir = os.path.dirname(os.path.abspath(out_path)) or "."
    os.makedirs(out_dir, exist_ok=True)
    manifest = iomod.RunManifest(
        "analyze", iomod.canonical_digest(doc),
        {"levels": levels, "workers": workers},
        [str(params_path)] + [b + ".raw" for b in bases], [str(out_path)], 0.0)
    manifest_digest = _finish_manifest(manifest, out_dir, clock)

    doc_out = report.to_dict()
    doc_out["schema"] = iomod.SCHEMA_REPORT
    doc_out["manifest_digest"] = manifest_digest
    iomod.dump_json(doc_out, out_path)

    plot_path = str(out_path) + ".csv"
    with open(plot_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# manifest_digest: {manifest_digest}\n")
        fh.write("j,log2_count\n")
        for row in report.per_level:
            if row.vitali_count > 0:
                fh.write(f"{row.j},{repr(float(np.log2(row.vitali_count)))}\n")
    return {"report": doc_out, "plot_csv": plot_path,
            "manifest_digest": manifest_digest}
