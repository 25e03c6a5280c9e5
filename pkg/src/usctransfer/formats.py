"""Serialization of run outcomes: JSON records, CSV tables, atomic writes.

All numeric text uses 12 significant digits with '.' as the decimal
separator and newline-terminated rows, so identical inputs reproduce
byte-identical files.  Wall-clock timings are deliberately left out of the
serialized forms for the same reason.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict
from typing import Any

import numpy as np

from .dynamics import Trajectory
from .metrics import RunRecord, cavity_indices, populations
from .model import ModelParams, flat_index
from .pulses import PiecewiseConstantSchedule
from .qoc import OptimizationResult

__all__ = [
    "SWEEP_CSV_HEADER",
    "fmt",
    "atomic_write_text",
    "run_record_to_dict",
    "run_record_json",
    "sweep_csv",
    "trajectory_csv",
    "schedule_csv",
    "schedule_from_csv",
    "optimization_result_to_dict",
    "optimization_result_json",
    "schedule_to_dict",
    "schedule_from_dict",
]

SWEEP_CSV_HEADER = "t_inv,g0,model,fidelity,leakage,peak_mean_photon"


def fmt(x: float) -> str:
    """12-significant-digit text form used in every CSV cell."""
    return f"{float(x):.12g}"


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temporary file and rename, so readers never see partials."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(value: Any) -> Any:
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def run_record_to_dict(record: RunRecord) -> dict[str, Any]:
    """JSON-ready form of a run record (wall time excluded, see module doc)."""
    return {
        "params": _jsonable(asdict(record.params)),
        "schedule": _jsonable(record.schedule),
        "fidelity": record.fidelity,
        "leakage": record.leakage,
        "peak_mean_photon": record.peak_mean_photon,
        "duration": record.duration,
        "error": record.error,
    }


def run_record_json(record: RunRecord) -> str:
    return json.dumps(run_record_to_dict(record), indent=2, sort_keys=True) + "\n"


def sweep_csv(records: list[RunRecord]) -> str:
    """Heatmap table, one row per grid point in the given (row-major) order."""
    lines = [SWEEP_CSV_HEADER]
    for rec in records:
        lines.append(
            ",".join(
                [
                    fmt(rec.schedule["t_inv"]),
                    fmt(rec.schedule["g0"]),
                    str(rec.schedule["model"]),
                    fmt(rec.fidelity),
                    fmt(rec.leakage),
                    fmt(rec.peak_mean_photon),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def trajectory_csv(traj: Trajectory, params: ModelParams) -> str:
    """Population histories: source / target / any-photon populations and norm."""
    p_source = populations(traj, [flat_index(0, 0, 1, params)])
    p_target = populations(traj, [flat_index(0, 1, 0, params)])
    p_cavity = populations(traj, cavity_indices(params))
    n_values = np.repeat(np.arange(params.n_max + 1), 4)
    mean_n = np.abs(traj.states) ** 2 @ n_values
    norm2 = traj.norms2()
    lines = ["time,p_source,p_target,p_cavity,mean_photon,norm2"]
    for k in range(traj.times.size):
        lines.append(
            ",".join(
                fmt(v)
                for v in (traj.times[k], p_source[k], p_target[k], p_cavity[k], mean_n[k], norm2[k])
            )
        )
    return "\n".join(lines) + "\n"


def schedule_csv(sched: PiecewiseConstantSchedule) -> str:
    """Step-function schedule as one row per bin."""
    lines = ["bin,t0,t1,g1,g2"]
    for k in range(sched.bins):
        t0 = sched.t_start + k * sched.dt
        lines.append(
            f"{k},{fmt(t0)},{fmt(t0 + sched.dt)},{fmt(sched.values1[k])},{fmt(sched.values2[k])}"
        )
    return "\n".join(lines) + "\n"


def schedule_from_csv(text: str) -> PiecewiseConstantSchedule:
    """Rebuild a schedule from :func:`schedule_csv` output.

    Bounds are not part of the CSV; they are recovered as the value range
    (floored at zero), which is sufficient for re-simulation.
    """
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines or lines[0] != "bin,t0,t1,g1,g2":
        raise ValueError("not a schedule CSV (missing 'bin,t0,t1,g1,g2' header)")
    rows = [ln.split(",") for ln in lines[1:]]
    if not rows:
        raise ValueError("schedule CSV has no bins")
    t0s = np.array([float(r[1]) for r in rows])
    t1s = np.array([float(r[2]) for r in rows])
    v1 = np.array([float(r[3]) for r in rows])
    v2 = np.array([float(r[4]) for r in rows])
    dts = t1s - t0s
    if not np.allclose(dts, dts[0], rtol=1e-9, atol=1e-12):
        raise ValueError("schedule CSV has non-uniform bins")
    lo = min(0.0, float(min(v1.min(), v2.min())))
    hi = float(max(v1.max(), v2.max(), lo))
    return PiecewiseConstantSchedule(float(t0s[0]), float(dts[0]), v1, v2, (lo, hi))


def schedule_to_dict(sched: PiecewiseConstantSchedule) -> dict[str, Any]:
    return {
        "t_start": sched.t_start,
        "dt": sched.dt,
        "values1": sched.values1.tolist(),
        "values2": sched.values2.tolist(),
        "bounds": list(sched.bounds),
        "outside": sched.outside,
    }


def schedule_from_dict(data: dict[str, Any]) -> PiecewiseConstantSchedule:
    return PiecewiseConstantSchedule(
        float(data["t_start"]),
        float(data["dt"]),
        np.asarray(data["values1"], dtype=float),
        np.asarray(data["values2"], dtype=float),
        (float(data["bounds"][0]), float(data["bounds"][1])),
        data.get("outside", "zero"),
    )


def optimization_result_to_dict(result: OptimizationResult) -> dict[str, Any]:
    return {
        "best_fidelity": result.best_fidelity,
        "converged": result.converged,
        "schedule": schedule_to_dict(result.best_schedule),
        "iteration_history": [
            {"iteration": it, "fidelity": f, "gradient_norm": g}
            for it, f, g in result.iteration_history
        ],
    }


def optimization_result_json(result: OptimizationResult) -> str:
    return json.dumps(optimization_result_to_dict(result), indent=2, sort_keys=True) + "\n"
