"""Reading and writing datasets, models, run configs and traces.

JSON files carry a ``format_version`` string; CSV files written here start
with a ``# format_version: X.Y`` line. Readers refuse unknown major versions.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .errors import DataError
from .model import Dataset, FeatureIndexer, ModelParams
from .optimizer import SpgConfig

FORMAT_VERSION = "1.0"
_MAJOR = FORMAT_VERSION.split(".")[0]
TRACE_COLUMNS = ("iter", "tau", "gnorm", "asym_bound", "time_ms")


def _check_version(version, where: str):
    if not isinstance(version, str) or version.split(".")[0] != _MAJOR:
        raise DataError(f"{where}: unsupported format_version {version!r} (expected {_MAJOR}.x)")


def _data_lines(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.startswith("#") or not line.strip():
                continue
            yield lineno, line


def load_binary_csv(path, impute_missing_as_zero: bool = False) -> Dataset:
    """Read a header + 0/1 rows CSV; the column count fixes ``p``.

    Cells other than ``0``/``1`` (blank, ``NA``, ...) become 0 when imputation is
    on and are rejected otherwise.
    """
    path = Path(path)
    lines = list(_data_lines(path))
    if not lines:
        raise DataError(f"{path}: empty file, header row expected")
    header_no, header = lines[0]
    names = next(csv.reader([header]))
    p = len(names)
    rows = []
    for lineno, line in lines[1:]:
        cells = next(csv.reader([line]))
        if len(cells) != p:
            raise DataError(f"{path}:{lineno}: expected {p} cells, found {len(cells)}")
        row = []
        for col, cell in enumerate(cells):
            cell = cell.strip()
            if cell in ("0", "1"):
                row.append(int(cell))
            elif impute_missing_as_zero:
                row.append(0)
            else:
                raise DataError(f"{path}:{lineno}: column {names[col]!r} has non-binary value {cell!r}")
        rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Dataset(np.array(rows, dtype=np.uint8), FeatureIndexer(p))


def save_binary_csv(path, states, names=None):
    states = np.asarray(states)
    names = names or [f"x{i + 1}" for i in range(states.shape[1])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        w.writerows(states.astype(int).tolist())


def model_to_dict(theta: ModelParams) -> dict:
    vec = np.asarray(theta.theta, dtype=np.float64)
    if vec.size == 0:
        raise DataError("theta: empty parameter vector")
    if not np.all(np.isfinite(vec)):
        raise DataError("theta: non-finite entries cannot be saved")
    return {"format_version": FORMAT_VERSION, "p": theta.p, "theta": [float(v) for v in vec]}


def model_from_dict(obj: dict, where: str = "model") -> ModelParams:
    if not isinstance(obj, dict):
        raise DataError(f"{where}: expected a JSON object")
    _check_version(obj.get("format_version"), f"{where}.format_version")
    p = obj.get("p")
    if not isinstance(p, int) or isinstance(p, bool) or p < 1:
        raise DataError(f"{where}.p: expected a positive integer, got {p!r}")
    theta = obj.get("theta")
    if not isinstance(theta, list) or not theta:
        raise DataError(f"{where}.theta: expected a nonempty list")
    m = p * (p + 1) // 2
    if len(theta) != m:
        raise DataError(f"{where}.theta: expected {m} entries for p={p}, got {len(theta)}")
    for k, v in enumerate(theta):
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise DataError(f"{where}.theta[{k}]: expected a finite number, got {v!r}")
    return ModelParams(FeatureIndexer(p), np.array(theta, dtype=np.float64))


def save_model(path, theta: ModelParams):
    Path(path).write_text(json.dumps(model_to_dict(theta), indent=1) + "\n", encoding="utf-8")


def load_model(path) -> ModelParams:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc
    return model_from_dict(obj, str(path))


@dataclasses.dataclass
class RunConfig(SpgConfig):
    data_path: str | None = None
    model_out: str | None = None
    trace_out: str | None = None
    experiment_name: str = "run"
    impute_missing: bool = False

    def spg(self) -> SpgConfig:
        names = {f.name for f in dataclasses.fields(SpgConfig)}
        return SpgConfig(**{k: v for k, v in dataclasses.asdict(self).items() if k in names})


def _type_ok(value, annotation: str) -> bool:
    if value is None:
        return "None" in annotation
    if isinstance(value, bool):
        return annotation.startswith("bool")
    if annotation.startswith("int"):
        return isinstance(value, int)
    if annotation.startswith("float"):
        return isinstance(value, (int, float))
    if annotation.startswith("str"):
        return isinstance(value, str)
    return True


def run_config_from_dict(obj: dict, where: str = "config") -> RunConfig:
    if not isinstance(obj, dict):
        raise DataError(f"{where}: expected a JSON object")
    obj = dict(obj)
    _check_version(obj.pop("format_version", None), f"{where}.format_version")
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(obj) - set(fields))
    if unknown:
        raise DataError(f"{where}.{unknown[0]}: unknown key")
    for key, value in obj.items():
        if not _type_ok(value, str(fields[key].type)):
            raise DataError(f"{where}.{key}: value {value!r} does not match type {fields[key].type}")
    try:
        return RunConfig(**obj)
    except ValueError as exc:
        raise DataError(f"{where}: {exc}") from exc


def run_config_to_dict(cfg: RunConfig) -> dict:
    return {"format_version": FORMAT_VERSION, **dataclasses.asdict(cfg)}


def save_run_config(path, cfg: RunConfig):
    Path(path).write_text(json.dumps(run_config_to_dict(cfg), indent=1, sort_keys=True) + "\n", encoding="utf-8")


def load_run_config(path) -> RunConfig:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc
    return run_config_from_dict(obj, str(path))


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_table(path, columns, rows):
    """CSV with a version comment line, ``repr`` floats and blank cells for missing values.

    ``path`` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_rows(path, columns, rows)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_rows(fh, columns, rows)


def _write_rows(fh, columns, rows):
    fh.write(f"# format_version: {FORMAT_VERSION}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])


def write_trace(path, history, exact_obj: bool | None = None, extra: dict | None = None):
    """Per-iteration trace ``iter,tau,gnorm,asym_bound,time_ms[,exact_obj]``.

    ``extra`` maps additional column names to per-iteration value sequences.
    """
    if exact_obj is None:
        exact_obj = bool(history) and all(r.exact_obj is not None for r in history)
    columns = list(TRACE_COLUMNS) + (["exact_obj"] if exact_obj else []) + list(extra or {})
    rows = []
    for n, r in enumerate(history):
        row = {"iter": r.k, "tau": r.tau_used, "gnorm": r.gnorm, "asym_bound": r.asym_bound, "time_ms": r.time_ms}
        if exact_obj:
            row["exact_obj"] = r.exact_obj
        for name, values in (extra or {}).items():
            row[name] = values[n]
        rows.append(row)
    write_table(path, columns, rows)


def read_table(path) -> list[dict]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# format_version:"):
            raise DataError(f"{path}: missing format_version line")
        _check_version(first.split(":", 1)[1].strip(), str(path))
        reader = csv.DictReader(fh)
        out = []
        for row in reader:
            out.append({k: (float(v) if v != "" else None) for k, v in row.items()})
    return out
