import json
import math
import os
from typing import Any, Iterable

import numpy as np
import pandas as pd


def _plain(value: Any) -> Any:
    """Converts numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def dumps_report(payload: dict) -> str:
    """Serializes a report with sorted keys so identical inputs give identical bytes."""
    return json.dumps(_plain(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def write_json(path: str, payload: dict) -> str:
    ensure_dir(os.path.dirname(os.path.abspath(path)))
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        file.write(dumps_report(payload))
    return path


def read_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as file:
        return json.load(file)


def write_csv(path: str, frame: pd.DataFrame) -> str:
    ensure_dir(os.path.dirname(os.path.abspath(path)))
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def write_mesh(path: str, vertices: np.ndarray, triangles: np.ndarray) -> str:
    """
    Writes an ASCII mesh: one ``v x y z`` line per vertex, one ``f i j k`` line per
    triangle with 1-based indices.
    """
    ensure_dir(os.path.dirname(os.path.abspath(path)))
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        for x, y, z in np.asarray(vertices, dtype=float).tolist():
            file.write(f"v {x!r} {y!r} {z!r}\n")
        for i, j, k in np.asarray(triangles, dtype=int) + 1:
            file.write(f"f {i} {j} {k}\n")
    return path


def read_mesh(path: str) -> tuple[np.ndarray, np.ndarray]:
    vertices, triangles = [], []
    with open(path, "r", encoding="utf-8") as file:
        for line in file:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                vertices.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                triangles.append([int(p) - 1 for p in parts[1:4]])
    return np.array(vertices, dtype=float).reshape(-1, 3), np.array(triangles, dtype=int).reshape(-1, 3)


def write_manifest(path: str, entries: Iterable[dict]) -> str:
    """Writes the stage manifest: an ordered list of per-stage outcomes."""
    return write_json(path, {"stages": list(entries)})
