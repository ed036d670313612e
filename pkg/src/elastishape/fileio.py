"""File formats: surface JSON/binary, OBJ export, PCA model files, CSV.

Surface files store raw grid samples (no triangulation); a triangulation
exists only in the OBJ export.  The binary variants use a 16-byte
magic+dims header followed by little-endian float64 payloads, and all
round trips are bit exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ParseError
from .grids import Surface, make_grid
from .shape_stats import ShapeModel

SURFACE_MAGIC = b"ESHSURF1"
MODEL_MAGIC = b"ESHMODL1"

__all__ = [
    "load_surface",
    "save_surface",
    "export_obj",
    "save_model",
    "load_model",
    "write_matrix_csv",
    "read_matrix_csv",
]


def _surface_from_fields(n_u, n_v, flat: np.ndarray, origin: str) -> Surface:
    expected = 3 * n_u * n_v
    if flat.size != expected:
        raise ParseError(
            f"{origin}: field 'points' has {flat.size} values, "
            f"expected 3*n_u*n_v = {expected}"
        )
    grid = make_grid(n_u, n_v)
    return Surface(grid=grid, points=flat.reshape(n_v, n_u, 3))


def _load_surface_json(path: Path) -> Surface:
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a JSON object")
    for key in ("n_u", "n_v", "points"):
        if key not in doc:
            raise ParseError(f"{path}: missing required field '{key}'")
    for key in ("n_u", "n_v"):
        if not isinstance(doc[key], int):
            raise ParseError(f"{path}: field '{key}' must be an integer")
    try:
        flat = np.asarray(doc["points"], dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: field 'points' is not a flat numeric array") from exc
    return _surface_from_fields(doc["n_u"], doc["n_v"], flat, str(path))


def _load_surface_binary(path: Path, raw: bytes) -> Surface:
    if len(raw) < 16:
        raise ParseError(f"{path}: truncated header")
    n_u, n_v = struct.unpack("<II", raw[8:16])
    expected = 16 + 8 * 3 * n_u * n_v
    if len(raw) != expected:
        raise ParseError(
            f"{path}: payload has {len(raw) - 16} bytes, "
            f"expected {expected - 16} for field 'points'"
        )
    flat = np.frombuffer(raw[16:], dtype="<f8").astype(float)
    return _surface_from_fields(n_u, n_v, flat, str(path))


def load_surface(path) -> Surface:
    """Load a surface from JSON or the binary variant (sniffed by magic)."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:8] == SURFACE_MAGIC:
        return _load_surface_binary(path, raw)
    return _load_surface_json(path)


def save_surface(f: Surface, path, binary: bool | None = None) -> None:
    """Write a surface; binary defaults to True unless the path ends in .json."""
    path = Path(path)
    if binary is None:
        binary = path.suffix.lower() != ".json"
    if binary:
        header = SURFACE_MAGIC + struct.pack("<II", f.grid.n_u, f.grid.n_v)
        payload = np.ascontiguousarray(f.flat(), dtype="<f8").tobytes()
        path.write_bytes(header + payload)
    else:
        doc = {
            "n_u": f.grid.n_u,
            "n_v": f.grid.n_v,
            "points": [float(x) for x in f.flat()],
        }
        path.write_text(json.dumps(doc))


def export_obj(f: Surface, path) -> None:
    """Quad-triangulated OBJ of the surface grid.

    Writes the n_u * n_v grid vertices in row-major order (polar rows
    outer), two triangles per grid quad with periodic wrap in azimuth,
    and a triangle fan over each boundary ring to close the poles.
    """
    n_u, n_v = f.grid.n_u, f.grid.n_v
    lines = []
    for row in f.points.reshape(-1, 3):
        lines.append(f"v {row[0]:.17g} {row[1]:.17g} {row[2]:.17g}")

    def vid(j, i):
        return j * n_u + i + 1

    for j in range(n_v - 1):
        for i in range(n_u):
            i2 = (i + 1) % n_u
            lines.append(f"f {vid(j, i)} {vid(j + 1, i)} {vid(j + 1, i2)}")
            lines.append(f"f {vid(j, i)} {vid(j + 1, i2)} {vid(j, i2)}")
    for i in range(1, n_u - 1):
        lines.append(f"f {vid(0, 0)} {vid(0, i + 1)} {vid(0, i)}")
    for i in range(1, n_u - 1):
        lines.append(f"f {vid(n_v - 1, 0)} {vid(n_v - 1, i)} {vid(n_v - 1, i + 1)}")
    Path(path).write_text("\n".join(lines) + "\n")


def save_model(model: ShapeModel, path) -> None:
    """Single-file model: JSON header, then mean / singulars / directions."""
    header = json.dumps(
        {
            "n_u": model.mean.grid.n_u,
            "n_v": model.mean.grid.n_v,
            "n_train": model.n_train,
            "n_directions": model.n_directions,
        }
    ).encode()
    parts = [
        MODEL_MAGIC,
        struct.pack("<I", len(header)),
        header,
        np.ascontiguousarray(model.mean.flat(), dtype="<f8").tobytes(),
        np.ascontiguousarray(model.singulars, dtype="<f8").tobytes(),
        np.ascontiguousarray(model.directions, dtype="<f8").tobytes(),
    ]
    Path(path).write_bytes(b"".join(parts))


def load_model(path) -> ShapeModel:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:8] != MODEL_MAGIC:
        raise ParseError(f"{path}: not a shape model file (bad magic)")
    (header_len,) = struct.unpack("<I", raw[8:12])
    try:
        head = json.loads(raw[12 : 12 + header_len].decode())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: malformed model header") from exc
    for key in ("n_u", "n_v", "n_train", "n_directions"):
        if key not in head:
            raise ParseError(f"{path}: model header missing field '{key}'")
    n_u, n_v = head["n_u"], head["n_v"]
    n_dirs = head["n_directions"]
    flat_len = 3 * n_u * n_v
    need = 12 + header_len + 8 * (flat_len + n_dirs + n_dirs * flat_len)
    if len(raw) != need:
        raise ParseError(f"{path}: model payload size mismatch")
    body = np.frombuffer(raw[12 + header_len :], dtype="<f8").astype(float)
    mean_flat = body[:flat_len]
    singulars = body[flat_len : flat_len + n_dirs]
    directions = body[flat_len + n_dirs :].reshape(n_dirs, flat_len)
    grid = make_grid(n_u, n_v)
    mean = Surface(grid=grid, points=mean_flat.reshape(n_v, n_u, 3))
    return ShapeModel(
        mean=mean, directions=directions, singulars=singulars, n_train=head["n_train"]
    )


def write_matrix_csv(path, matrix: np.ndarray, header: list) -> None:
    """Plain CSV with a header row; full float precision."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape[1] != len(header):
        raise ValueError("header length does not match column count")
    rows = [",".join(header)]
    for row in matrix:
        rows.append(",".join(f"{x:.17g}" for x in row))
    Path(path).write_text("\n".join(rows) + "\n")


def read_matrix_csv(path) -> tuple[list, np.ndarray]:
    """Read back a header + numeric matrix CSV."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines:
        raise ParseError(f"{path}: empty CSV")
    header = lines[0].split(",")
    data = []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise ParseError(f"{path}: line {ln} has {len(parts)} fields, expected {len(header)}")
        try:
            data.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(f"{path}: line {ln} has a non-numeric field") from exc
    return header, np.asarray(data, dtype=float)
