"""Artifact writers: long-format CSV fields, JSON documents, run metadata.

Floats in CSV files are written with 17 significant digits so that every
value parses back to the identical double.  JSON uses Python's shortest
round-trip representation, which has the same guarantee.  NaN becomes
``nan`` in CSV and ``null`` in JSON.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .gsa_mc import SensitivityResult
from .qoi import OperatingSet

__all__ = ["fmt", "to_jsonable", "write_json", "write_field", "write_envelope", "write_sobol", "indices_document"]


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def to_jsonable(obj):
    """Convert numpy containers/scalars and NaN to plain JSON data."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if not math.isfinite(x) else x
    return obj


def write_json(path: str | Path, doc) -> Path:
    path = Path(path)
    path.write_text(json.dumps(to_jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    return path


def _coords(opset: OperatingSet):
    if opset.kind == "cycle-profile":
        return ["time_s", "torque_Nm", "omega_rad_s"], [opset.time, opset.torque, opset.omega_m]
    return ["torque_Nm", "omega_rad_s"], [opset.torque, opset.omega_m]


def _write_rows(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    cols = [np.asarray(c, dtype=float) for c in columns]
    lines = [",".join(header)]
    lines += [",".join(fmt(c[i]) for c in cols) for i in range(cols[0].size)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def field_metadata(opset: OperatingSet, mask: np.ndarray) -> dict:
    doc = {"kind": opset.kind, "n_op": opset.n_op, "mask": np.asarray(mask, dtype=bool)}
    if opset.kind == "map-grid":
        doc.update(
            grid_shape=list(opset.grid_shape),
            grid_index=opset.grid_index,
            torque_axis=opset.torque_axis,
            omega_axis=opset.omega_axis,
        )
    return doc


def write_field(path: str | Path, opset: OperatingSet, values: np.ndarray, mask: np.ndarray | None = None) -> Path:
    """One value per operating point, long format, plus a ``.meta.json`` sidecar."""
    path = Path(path)
    values = np.asarray(values, dtype=float)
    if mask is None:
        mask = np.isfinite(values)
    header, cols = _coords(opset)
    _write_rows(path, header + ["value"], cols + [values])
    write_json(path.with_suffix(".meta.json"), field_metadata(opset, mask))
    return path


def write_envelope(path: str | Path, omega: np.ndarray, torque: np.ndarray) -> Path:
    path = Path(path)
    _write_rows(path, ["omega_rad_s", "torque_Nm"], [omega, torque])
    return path


def write_sobol(outdir: str | Path, opset: OperatingSet, result: SensitivityResult) -> list[Path]:
    """``sobol_<param>.csv`` with first- and total-order index per operating point."""
    header, cols = _coords(opset)
    paths = []
    for j, name in enumerate(result.names):
        path = Path(outdir) / f"sobol_{name}.csv"
        _write_rows(path, header + ["first", "total"], cols + [result.per_component_first[j], result.per_component_total[j]])
        paths.append(path)
    return paths


def indices_document(result: SensitivityResult, metadata: dict | None = None) -> dict:
    return {
        "method": result.method,
        "parameters": [
            {
                "parameter": name,
                "S_first": result.per_component_first[j],
                "S_total": result.per_component_total[j],
                "G_first": result.generalized_first[j],
                "G_total": result.generalized_total[j],
            }
            for j, name in enumerate(result.names)
        ],
        "mask": result.mask,
        "degenerate": result.degenerate,
        "ranking": result.ranking(),
        "metadata": metadata or {},
    }
