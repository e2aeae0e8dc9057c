"""Complex numbers as [re, im] pairs, deterministic JSON and CSV output."""
import csv
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def pair(z: complex) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def unpair(value: Sequence[float]) -> complex:
    return complex(float(value[0]), float(value[1]))


def pairs(values: Iterable[complex]) -> list[list[float]]:
    return [pair(z) for z in values]


def matrix_pairs(matrix: np.ndarray) -> list[list[list[float]]]:
    return [pairs(row) for row in np.asarray(matrix)]


def to_jsonable(obj: Any) -> Any:
    """Recursively turn complex numbers and numpy values into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return pair(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj: Any) -> str:
    # repr-based float formatting is the shortest round-trip decimal
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=False, allow_nan=True) + "\n"


def write_json(path: Path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def read_json(path: Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    return path
