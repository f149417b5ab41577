"""JSON schemas for problems and solver results.

Problem schema:

    {"n": int,
     "A0": [[{"re": f, "im": f}, ...], ...],
     "constraints": [{"A": <matrix>, "c": f}, ...],
     "metadata": {...}}

Complex entries are always {"re", "im"} pairs.  Parsers reject matrices
that are non-Hermitian beyond tolerance 1e-9 and instances whose stated
dimension disagrees with the matrix shapes.  Metadata values that are
numpy arrays are stored as tagged objects ({"complex_vector": ...},
{"complex_matrix": ...}, {"real_vector": ...}) and restored on load;
scalars and strings pass through unchanged.

Result documents are write-oriented: non-finite or missing metrics are
emitted as null so the files stay strict JSON.
"""

from __future__ import annotations

import json
import math
from typing import Any, Optional

import numpy as np

from .fpp import FppResult
from .qcqp import QcqpInstance
from .sdr import SdrResult

__all__ = [
    "complex_to_pair",
    "pair_to_complex",
    "vector_to_json",
    "json_to_vector",
    "matrix_to_json",
    "json_to_matrix",
    "instance_to_json",
    "json_to_instance",
    "write_instance",
    "read_instance",
    "fpp_result_to_json",
    "sdr_result_to_json",
]

HERMITIAN_REJECT_TOL = 1e-9


def complex_to_pair(value) -> dict:
    z = complex(value)
    return {"re": float(z.real), "im": float(z.imag)}


def pair_to_complex(obj) -> complex:
    if not isinstance(obj, dict) or set(obj) != {"re", "im"}:
        raise ValueError(f"expected a {{re, im}} pair, got {obj!r}")
    re, im = obj["re"], obj["im"]
    for part in (re, im):
        if isinstance(part, bool) or not isinstance(part, (int, float)):
            raise ValueError(f"pair entries must be numbers, got {obj!r}")
    return complex(re, im)


def vector_to_json(vec) -> list:
    return [complex_to_pair(v) for v in np.asarray(vec, dtype=complex)]


def json_to_vector(data) -> np.ndarray:
    if not isinstance(data, list):
        raise ValueError("vector must be a list of {re, im} pairs")
    return np.array([pair_to_complex(p) for p in data], dtype=complex)


def matrix_to_json(mat) -> list:
    arr = np.asarray(mat, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim {arr.ndim}")
    return [[complex_to_pair(v) for v in row] for row in arr]


def json_to_matrix(data, hermitian_tol: Optional[float] = HERMITIAN_REJECT_TOL) -> np.ndarray:
    """Parse a matrix of pairs; reject non-square or non-Hermitian input."""
    if not isinstance(data, list) or not data:
        raise ValueError("matrix must be a nonempty list of rows")
    rows = []
    for row in data:
        if not isinstance(row, list):
            raise ValueError("matrix rows must be lists")
        rows.append([pair_to_complex(p) for p in row])
    arr = np.array(rows, dtype=complex)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"matrix must be square, got shape {arr.shape}")
    if hermitian_tol is not None:
        gap = float(np.max(np.abs(arr - arr.conj().T)))
        if gap > hermitian_tol:
            raise ValueError(
                f"matrix is not Hermitian: max asymmetry {gap:.3e} exceeds {hermitian_tol:.0e}"
            )
    return arr


def _metadata_value_to_json(value) -> Any:
    if isinstance(value, np.ndarray):
        shape = [int(d) for d in value.shape]
        if np.iscomplexobj(value):
            data = [complex_to_pair(v) for v in value.ravel()]
            return {"array": {"dtype": "complex", "shape": shape, "data": data}}
        data = [float(v) for v in value.ravel()]
        return {"array": {"dtype": "real", "shape": shape, "data": data}}
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, str) or value is None:
        return value
    if isinstance(value, dict):
        return {str(k): _metadata_value_to_json(v) for k, v in value.items()}
    raise ValueError(f"cannot serialize metadata value of type {type(value).__name__}")


def _metadata_value_from_json(value) -> Any:
    if isinstance(value, dict):
        if set(value) == {"array"}:
            tag = value["array"]
            shape = tuple(tag["shape"])
            if tag["dtype"] == "complex":
                flat = np.array([pair_to_complex(p) for p in tag["data"]], dtype=complex)
            else:
                flat = np.array([float(v) for v in tag["data"]])
            return flat.reshape(shape)
        return {k: _metadata_value_from_json(v) for k, v in value.items()}
    return value


def instance_to_json(inst: QcqpInstance) -> dict:
    return {
        "n": int(inst.dim),
        "A0": matrix_to_json(inst.objective),
        "constraints": [
            {"A": matrix_to_json(mat), "c": float(bound)} for mat, bound in inst.constraints
        ],
        "metadata": {str(k): _metadata_value_to_json(v) for k, v in inst.metadata.items()},
    }


def json_to_instance(data) -> QcqpInstance:
    if not isinstance(data, dict):
        raise ValueError("instance document must be a JSON object")
    missing = {"n", "A0", "constraints"} - set(data)
    if missing:
        raise ValueError(f"instance document is missing keys {sorted(missing)}")
    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    objective = json_to_matrix(data["A0"])
    if objective.shape != (n, n):
        raise ValueError(f"A0 has shape {objective.shape}, expected ({n}, {n})")
    raw_cons = data["constraints"]
    if not isinstance(raw_cons, list) or not raw_cons:
        raise ValueError("constraints must be a nonempty list")
    cons = []
    for idx, item in enumerate(raw_cons):
        if not isinstance(item, dict) or {"A", "c"} - set(item):
            raise ValueError(f"constraint {idx} must be an object with keys A and c")
        mat = json_to_matrix(item["A"])
        if mat.shape != (n, n):
            raise ValueError(f"constraint {idx} has shape {mat.shape}, expected ({n}, {n})")
        bound = item["c"]
        if isinstance(bound, bool) or not isinstance(bound, (int, float)) or not math.isfinite(bound):
            raise ValueError(f"constraint {idx} bound must be a finite number, got {bound!r}")
        cons.append((mat, float(bound)))
    metadata = {
        str(k): _metadata_value_from_json(v) for k, v in data.get("metadata", {}).items()
    }
    return QcqpInstance(objective, tuple(cons), metadata)


def write_instance(path, inst: QcqpInstance) -> None:
    doc = instance_to_json(inst)
    json_to_instance(doc)  # schema-validate before touching the file
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_instance(path) -> QcqpInstance:
    with open(path) as fh:
        return json_to_instance(json.load(fh))


def _finite_or_none(value) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def fpp_result_to_json(result: FppResult, include_trace: bool = False) -> dict:
    cert = result.certificate
    doc = {
        "status": result.status,
        "objective": _finite_or_none(result.objective),
        "x": vector_to_json(result.x_final),
        "s": [float(v) for v in result.s_final],
        "iterations_to_feasibility": result.iterations_to_feasibility,
        "iterations_to_convergence": result.iterations_to_convergence,
        "kkt": {
            "passed": bool(result.kkt_passed),
            "residual": _finite_or_none(result.kkt_residual),
            "stationarity": _finite_or_none(cert.stationarity_residual),
            "complementarity": _finite_or_none(cert.complementarity_residual),
            "primal_violation": _finite_or_none(cert.primal_violation),
            "multipliers": [float(v) for v in cert.multipliers],
        },
    }
    if include_trace:
        doc["trace"] = [
            {
                "iteration": k,
                "center": vector_to_json(rec.center),
                "x": vector_to_json(rec.x),
                "slacks": [float(v) for v in rec.slacks],
                "surrogate_objective": _finite_or_none(rec.surrogate_objective),
                "true_objective": _finite_or_none(rec.true_objective),
                "violations": [float(v) for v in rec.violations],
            }
            for k, rec in enumerate(result.trace.records)
        ]
    return doc


def sdr_result_to_json(result: SdrResult) -> dict:
    return {
        "status": result.status,
        "objective": _finite_or_none(result.best_objective),
        "x": None if result.best_point is None else vector_to_json(result.best_point),
        "rank1": bool(result.rank1),
        "lower_bound": _finite_or_none(result.lower_bound),
        "randomizations_tried": int(result.randomizations_tried),
    }
