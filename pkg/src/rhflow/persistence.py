"""Deterministic on-disk format for runs and reports.

Floats are serialized with 17 significant digits ("%.17g"), which
round-trips IEEE doubles exactly, and dict keys are emitted sorted, so the
same trajectory always produces byte-identical files.  A run directory
holds

    meta.json        grid/variant/schedule echo, times, per-snapshot
                     constants, halt reason, scenario echo
    snap_00000.json  one file per snapshot: t, u, and (unless the run was
                     saved u-only) the flattened row-major metric and map
    manifest.json    sha256 of every other file plus wall time; written
                     last, so its presence marks a complete directory

`load_run` verifies every hash before reconstructing the trajectory.
Reports (margin checks, Harnack pair tables) are saved as a JSON summary
plus a CSV of per-snapshot or per-pair rows with the same float format.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np

from .flow import AlphaSchedule, FlowVariant, Snapshot, Trajectory
from .grid import Grid

FORMAT_VERSION = 1


class HashMismatchError(ValueError):
    """A stored file does not match its manifest digest."""


def _format_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    s = "%.17g" % x
    # keep the token a float on reload (json would parse "2" as an int)
    if "." not in s and "e" not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj) -> str:
    """JSON text with %.17g floats and sorted keys; bitwise reproducible."""
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        body = ",".join(f"{json.dumps(str(k))}:{dumps(v)}" for k, v in items)
        return "{" + body + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _snap_name(i: int) -> str:
    return f"snap_{i:05d}.json"


def save_run(
    traj: Trajectory,
    out_dir,
    full_fields: bool = True,
    overwrite: bool = False,
) -> Path:
    """Write a trajectory to a run directory and return its path."""
    t0 = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if (out / "manifest.json").exists() and not overwrite:
        raise FileExistsError(f"{out} already holds a run (pass overwrite=True)")
    for stale in out.glob("snap_*.json"):
        stale.unlink()

    grid = traj.grid
    fields_saved = ["u", "g", "phi"] if full_fields else ["u"]
    meta = {
        "format_version": FORMAT_VERSION,
        "grid": {
            "dim": grid.dim,
            "n_points": list(grid.n_points),
            "lengths": list(grid.lengths),
        },
        "variant": {
            "kind": traj.variant.kind,
            "m": traj.variant.m,
            "mu": traj.variant.mu,
        },
        "schedule": {
            "alpha0": traj.schedule.alpha0,
            "alpha_bar": traj.schedule.alpha_bar,
            "form": traj.schedule.form,
            "rate": traj.schedule.rate,
        },
        "dt_snapshot": traj.dt,
        "dt_sub": traj.dt_sub,
        "n_snapshots": len(traj.snapshots),
        "times": [s.t for s in traj.snapshots],
        "alphas": list(traj.alphas),
        "constants": traj.constants,
        "halt_reason": traj.halt_reason,
        "completed": traj.completed,
        "fields_saved": fields_saved,
        "phi_components": int(traj.snapshots[0].phi.shape[-1]),
        "scenario": traj.scenario,
    }
    (out / "meta.json").write_text(dumps(meta))

    for i, s in enumerate(traj.snapshots):
        payload = {
            "index": i,
            "t": s.t,
            "u": s.u.ravel(order="C").tolist(),
        }
        if full_fields:
            payload["g"] = s.g.ravel(order="C").tolist()
            payload["phi"] = s.phi.ravel(order="C").tolist()
        (out / _snap_name(i)).write_text(dumps(payload))

    files = {"meta.json": _sha256(out / "meta.json")}
    for i in range(len(traj.snapshots)):
        files[_snap_name(i)] = _sha256(out / _snap_name(i))
    manifest = {
        "format_version": FORMAT_VERSION,
        "files": files,
        "wall_time_s": time.perf_counter() - t0,
    }
    (out / "manifest.json").write_text(dumps(manifest))
    return out


def load_run(run_dir, verify: bool = True) -> Trajectory:
    """Rebuild a trajectory from a run directory, verifying manifest hashes."""
    out = Path(run_dir)
    manifest_path = out / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"{out} has no manifest.json (incomplete run?)")
    manifest = json.loads(manifest_path.read_text())
    if verify:
        for name, digest in manifest["files"].items():
            actual = _sha256(out / name)
            if actual != digest:
                raise HashMismatchError(
                    f"{name}: manifest says {digest[:12]}..., file is {actual[:12]}..."
                )
    meta = json.loads((out / "meta.json").read_text())
    if "g" not in meta["fields_saved"]:
        raise ValueError(
            f"{out} was saved u-only; re-run with full fields to reload it"
        )
    grid = Grid(
        dim=meta["grid"]["dim"],
        n_points=tuple(meta["grid"]["n_points"]),
        lengths=tuple(meta["grid"]["lengths"]),
    )
    variant = FlowVariant(**meta["variant"])
    schedule = AlphaSchedule(**meta["schedule"])
    d = meta["phi_components"]
    snaps = []
    for i in range(meta["n_snapshots"]):
        payload = json.loads((out / _snap_name(i)).read_text())
        g = np.array(payload["g"]).reshape(grid.shape + (grid.dim, grid.dim))
        phi = np.array(payload["phi"]).reshape(grid.shape + (d,))
        u = np.array(payload["u"]).reshape(grid.shape)
        snaps.append(Snapshot(payload["t"], g, phi, u))
    return Trajectory(
        grid=grid,
        variant=variant,
        schedule=schedule,
        snapshots=snaps,
        dt=meta["dt_snapshot"],
        dt_sub=meta["dt_sub"],
        halt_reason=meta["halt_reason"],
        constants=meta["constants"],
        alphas=meta["alphas"],
        scenario=meta["scenario"],
    )


# ---------------------------------------------------------------------------
# report files


def _fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return _format_float(float(v))
    if isinstance(v, (tuple, list)):
        return ";".join(_fmt_cell(x) for x in v)
    return str(v)


def save_report(report, out_dir, name: str) -> dict:
    """Write <name>.json (summary) and, when rows exist, <name>.csv.

    Accepts the report objects of the estimate/Harnack modules (anything
    with summary()/rows()) or a plain dict.  Returns {"json": path, ...}.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = report.summary() if hasattr(report, "summary") else dict(report)
    rows = report.rows() if hasattr(report, "rows") else summary.pop("rows", None)
    paths = {}
    json_path = out / f"{name}.json"
    json_path.write_text(dumps(summary))
    paths["json"] = json_path
    if rows:
        csv_path = out / f"{name}.csv"
        header = list(rows[0].keys())
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_fmt_cell(row[k]) for k in header))
        csv_path.write_text("\n".join(lines) + "\n")
        paths["csv"] = csv_path
    return paths


def save_plotdata(report, out_dir, name: str) -> dict:
    """Plot-ready CSVs for an estimate report: the margin timeline and the
    LHS/RHS series at the worst gated node."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    rows = report.rows()
    timeline = out / f"{name}_margin_timeline.csv"
    header = list(rows[0].keys())
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt_cell(row[k]) for k in header))
    timeline.write_text("\n".join(lines) + "\n")
    paths["margin_timeline"] = timeline

    if hasattr(report, "worst"):
        node = report.worst["node"]
        S = report.lhs.shape[0]
        lhs_series = report.lhs.reshape(S, -1)[:, node]
        rhs_series = report.rhs.reshape(S, -1)[:, node]
        lines = ["t,lhs,rhs" + (",rhs_alt" if report.alt is not None else "")]
        for i in range(S):
            cells = [
                _format_float(float(report.times[i])),
                _format_float(float(lhs_series[i])),
                _format_float(float(rhs_series[i])),
            ]
            if report.alt is not None:
                cells.append(
                    _format_float(float(report.alt["rhs"].reshape(S, -1)[:, node][i]))
                )
            lines.append(",".join(cells))
        node_path = out / f"{name}_worst_node.csv"
        node_path.write_text("\n".join(lines) + "\n")
        paths["worst_node"] = node_path
    return paths
