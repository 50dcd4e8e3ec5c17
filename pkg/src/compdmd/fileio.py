"""
Text formats for snapshot matrices and fitted models.

Every float is written with 17 significant digits so reading a file back
reproduces the binary64 values exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dmd import CompartmentLayout, DmdModel, SnapshotMatrix
from .errors import InputError

SNAPSHOT_HEADER = "SNAPSHOTS v1"
MODEL_HEADER = "DMDMODEL v1"
MODEL_SECTIONS = ("LAMBDA", "OMEGA", "B", "PSI")


def fmt(x: float) -> str:
    return "%.17g" % x


def _parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise InputError(f"{where}: cannot parse {text!r} as a number") from None


def _key_value(line: str, lineno: int, path) -> tuple[str, str]:
    key, sep, value = line.partition("=")
    if not sep:
        raise InputError(f"{path}:{lineno}: expected key=value, got {line!r}")
    return key.strip(), value.strip()


def write_snapshots(path, y: SnapshotMatrix, metadata: dict | None = None) -> None:
    lines = [SNAPSHOT_HEADER, f"dt={fmt(y.dt)}", f"cell_weight={fmt(y.cell_weight)}", f"layout={y.layout}"]
    for key, value in (metadata or {}).items():
        lines.append(f"{key}={value}")
    for row in y.data:
        lines.append(",".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_snapshots(path) -> tuple[SnapshotMatrix, dict]:
    """Return the snapshot matrix and any extra ``key=value`` header lines."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != SNAPSHOT_HEADER:
        raise InputError(f"{path}:1: expected header {SNAPSHOT_HEADER!r}")
    header = {}
    lineno = 1
    for lineno, line in enumerate(lines[1:], start=2):
        if "=" not in line:
            break
        key, value = _key_value(line, lineno, path)
        header[key] = value
    else:
        lineno = len(lines) + 1
    for key in ("dt", "cell_weight", "layout"):
        if key not in header:
            raise InputError(f"{path}: missing header line {key}=")
    layout = CompartmentLayout.parse(header.pop("layout"))
    dt = _parse_float(header.pop("dt"), f"{path}: dt")
    cell_weight = _parse_float(header.pop("cell_weight"), f"{path}: cell_weight")
    rows = []
    for n, line in enumerate(lines[lineno - 1 :], start=lineno):
        if not line.strip():
            continue
        rows.append([_parse_float(v, f"{path}:{n}") for v in line.split(",")])
    if not rows or len({len(r) for r in rows}) != 1:
        raise InputError(f"{path}: snapshot rows are missing or ragged")
    return SnapshotMatrix(np.array(rows), dt, layout, cell_weight), header


def write_model(path, model: DmdModel) -> None:
    lines = [
        MODEL_HEADER,
        f"rank={model.rank}",
        f"dt={fmt(model.dt)}",
        f"layout={model.layout}",
        f"cell_weight={fmt(model.cell_weight)}",
        f"train_columns={model.train_columns}",
    ]
    for name, values in (("LAMBDA", model.lam), ("OMEGA", model.omega), ("B", model.b)):
        lines.append(name)
        lines.extend(f"{fmt(z.real)},{fmt(z.imag)}" for z in values)
    lines.append("PSI")
    for row in model.psi:
        lines.append(",".join(f"{fmt(z.real)},{fmt(z.imag)}" for z in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _complex_row(line: str, where: str) -> np.ndarray:
    parts = [_parse_float(v, where) for v in line.split(",")]
    if len(parts) % 2:
        raise InputError(f"{where}: odd number of real/imaginary components")
    pairs = np.array(parts).reshape(-1, 2)
    return pairs[:, 0] + 1j * pairs[:, 1]


def read_model(path) -> DmdModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != MODEL_HEADER:
        raise InputError(f"{path}:1: expected header {MODEL_HEADER!r}")
    header, sections, current = {}, {}, None
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        if line in MODEL_SECTIONS:
            current = sections.setdefault(line, [])
        elif current is None:
            key, value = _key_value(line, lineno, path)
            header[key] = value
        else:
            current.append(_complex_row(line, f"{path}:{lineno}"))
    missing = [s for s in MODEL_SECTIONS if s not in sections] + [
        k for k in ("rank", "dt", "layout") if k not in header
    ]
    if missing:
        raise InputError(f"{path}: missing {', '.join(missing)}")
    try:
        rank = int(header["rank"])
        train_columns = int(header.get("train_columns", "0"))
    except ValueError:
        raise InputError(f"{path}: rank and train_columns must be integers") from None
    layout = CompartmentLayout.parse(header["layout"])
    vectors = {}
    for name in ("LAMBDA", "OMEGA", "B"):
        rows = sections[name]
        if len(rows) != rank or any(len(r) != 1 for r in rows):
            raise InputError(f"{path}: section {name} must hold {rank} values")
        vectors[name] = np.concatenate(rows) if rows else np.zeros(0, dtype=complex)
    psi_rows = sections["PSI"]
    if len(psi_rows) != layout.state_dim or any(len(r) != rank for r in psi_rows):
        raise InputError(f"{path}: PSI must be {layout.state_dim} rows of {rank} complex pairs")
    return DmdModel(
        psi=np.vstack(psi_rows),
        lam=vectors["LAMBDA"],
        omega=vectors["OMEGA"],
        b=vectors["B"],
        dt=_parse_float(header["dt"], f"{path}: dt"),
        layout=layout,
        cell_weight=_parse_float(header.get("cell_weight", "1"), f"{path}: cell_weight"),
        train_columns=train_columns,
    )
