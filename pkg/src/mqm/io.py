"""Result files: columnar CSV, JSON summaries, dense 2-D grids and a checksummed manifest."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

CSV_FORMAT = "%.17g"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        # JSON has no inf/nan; keep them readable as strings
        return v if np.isfinite(v) else repr(v)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


class ResultWriter:
    """Writes into one output directory and remembers every file for the manifest."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.files: list[str] = []

    def ensure_writable(self):
        """Fail fast, before any computation, if the directory cannot be written."""
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            probe = self.out_dir / ".mqm-write-test"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise PermissionError(f"output directory {self.out_dir} is not writable: {exc}") from exc

    def _path(self, name: str) -> Path:
        if name not in self.files:
            self.files.append(name)
        return self.out_dir / name

    def write_series(self, name: str, columns: dict):
        """One header row, then one sample per line with 17 significant digits."""
        names = list(columns)
        data = np.column_stack([np.asarray(columns[c], dtype=float).ravel() for c in names])
        with open(self._path(name), "w", newline="\n") as fh:
            np.savetxt(fh, data, fmt=CSV_FORMAT, delimiter=",", header=",".join(names), comments="")

    def write_json(self, name: str, obj):
        self._path(name).write_text(dumps(obj))

    def write_grid(self, name: str, values, row_axis: tuple, col_axis: tuple, quantity: str):
        """Dense row-major CSV of ``values[i_row, i_col]`` plus ``<name>.json`` describing the axes."""
        values = np.asarray(values, dtype=float)
        (row_name, row_vals), (col_name, col_vals) = row_axis, col_axis
        if values.shape != (len(row_vals), len(col_vals)):
            raise ValueError(f"grid {name}: shape {values.shape} does not match its axes")
        with open(self._path(name), "w", newline="\n") as fh:
            np.savetxt(fh, values, fmt=CSV_FORMAT, delimiter=",")
        stem = name.rsplit(".", 1)[0]
        self.write_json(f"{stem}.json", {
            "file": name,
            "quantity": quantity,
            "order": "row-major",
            "shape": list(values.shape),
            "rows": {"name": row_name, "values": np.asarray(row_vals, dtype=float)},
            "columns": {"name": col_name, "values": np.asarray(col_vals, dtype=float)},
        })

    def write_manifest(self, scenario: str, resolved_config: dict, name: str = "manifest.json"):
        entries = []
        for f in sorted(self.files):
            digest = hashlib.sha256((self.out_dir / f).read_bytes()).hexdigest()
            entries.append({"file": f, "sha256": digest, "bytes": os.path.getsize(self.out_dir / f)})
        self.write_json(name, {"scenario": scenario, "config": resolved_config, "files": entries})
