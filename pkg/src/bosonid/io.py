"""File formats: unitary, mixture, counts and design JSON, and schema-tagged CSV."""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence, TextIO, Union

import numpy as np

from .errors import InputError
from .hidden_dof import PartitionMixture
from .linopt import is_unitary

SCHEMA_VERSION = 1
CSV_SCHEMA_LINE = f"# schema-version: {SCHEMA_VERSION}"

PathLike = Union[str, Path]


def load_json(path: PathLike) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    version = data.get("schema_version", SCHEMA_VERSION) if isinstance(data, dict) else None
    if version != SCHEMA_VERSION:
        raise InputError(f"{path}: unsupported schema_version {version!r}")
    return data


def dump_json(data: Mapping[str, Any], out: Union[PathLike, TextIO, None] = None) -> str:
    payload = {"schema_version": SCHEMA_VERSION, **data}
    text = json.dumps(payload, indent=2, default=_jsonable) + "\n"
    _emit(text, out)
    return text


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(text: str, out) -> None:
    if out is None:
        return
    if hasattr(out, "write"):
        out.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], out: Union[PathLike, TextIO, None] = None) -> str:
    buf = _io.StringIO()
    buf.write(CSV_SCHEMA_LINE + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    _emit(text, out)
    return text


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def _fmt(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ---------------------------------------------------------------- unitaries


def unitary_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=np.complex128)
    return {
        "dim_rows": m.shape[0],
        "dim_cols": m.shape[1],
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in m],
        "unitary": bool(is_unitary(m)),
    }


def unitary_from_json(data: Mapping[str, Any]) -> np.ndarray:
    try:
        rows, cols = int(data["dim_rows"]), int(data["dim_cols"])
        m = np.array([[complex(re, im) for re, im in row] for row in data["entries"]], dtype=np.complex128)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed matrix file: {exc}") from exc
    if m.shape != (rows, cols):
        raise InputError(f"declared shape {(rows, cols)} but entries have shape {m.shape}")
    return m


def read_matrix(path: PathLike) -> np.ndarray:
    return unitary_from_json(load_json(path))


def read_unitary(path: PathLike, tol: float = 1e-10) -> np.ndarray:
    u = read_matrix(path)
    if not is_unitary(u, tol):
        raise InputError(f"{path}: matrix is not unitary within {tol}")
    return u


def write_unitary(m: np.ndarray, out: Union[PathLike, TextIO, None]) -> str:
    return dump_json(unitary_to_json(m), out)


# ---------------------------------------------------------------- mixtures


def read_mixture(path: PathLike) -> PartitionMixture:
    data = load_json(path)
    try:
        n = int(data["n"])
        weights = {tuple(int(x) for x in w["partition"]): float(w["p"]) for w in data["weights"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed mixture file: {exc}") from exc
    return PartitionMixture(n, weights)


def mixture_to_json(mix: PartitionMixture) -> dict:
    return {"n": mix.n, "weights": [{"partition": list(lam.parts), "p": p} for lam, p in mix.weights.items()]}


# ---------------------------------------------------------------- counts


def label_to_json(label) -> Any:
    if label == "other":
        return "other"
    if label == ():
        return "empty"
    return {"sites": [int(s) for s in label]}


def label_from_json(obj) -> Any:
    if obj == "other" or obj == {"other": True}:
        return "other"
    if obj == "empty" or obj == {"empty": True}:
        return ()
    if isinstance(obj, Mapping) and "sites" in obj:
        sites = tuple(int(s) for s in obj["sites"])
        if not sites:
            return ()
        return tuple(sorted(sites))
    raise InputError(f"unknown outcome label {obj!r}")


def counts_to_json(settings: Sequence[tuple[Sequence[int], Mapping[Any, int]]], n_modes: int | None = None) -> dict:
    out = {
        "settings": [
            {
                "prepared_sites": [int(s) for s in prepared],
                "outcomes": [{"label": label_to_json(k), "count": int(c)} for k, c in counts.items()],
            }
            for prepared, counts in settings
        ]
    }
    if n_modes is not None:
        out["n_modes"] = n_modes
    return out


def read_counts(path: PathLike) -> list[tuple[tuple[int, ...], dict[Any, int]]]:
    data = load_json(path)
    n_modes = data.get("n_modes")
    result = []
    try:
        for setting in data["settings"]:
            prepared = tuple(int(s) for s in setting["prepared_sites"])
            counts: dict[Any, int] = {}
            for entry in setting["outcomes"]:
                label = label_from_json(entry["label"])
                count = int(entry["count"])
                if count < 0:
                    raise InputError(f"{path}: negative count")
                if label in counts:
                    raise InputError(f"{path}: duplicate label {entry['label']!r}")
                if n_modes is not None and isinstance(label, tuple) and any(not 1 <= s <= n_modes for s in label):
                    raise InputError(f"{path}: site outside 1..{n_modes}")
                counts[label] = count
            result.append((prepared, counts))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed counts file: {exc}") from exc
    return result


def write_counts(settings, out, n_modes: int | None = None) -> str:
    return dump_json(counts_to_json(settings, n_modes), out)
