"""CSV tables, legacy-VTK structured grids and the run manifest."""

from __future__ import annotations

import os
import platform
import tempfile
from pathlib import Path

import numpy as np

from .mesh import Mesh

FLOAT_FMT = "%.16e"  # 17 significant digits


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_value(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return FLOAT_FMT % float(v)


def write_csv(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def write_vtk(path, mesh: Mesh, point_data: dict | None = None, cell_data: dict | None = None, title="cutvibro") -> None:
    """Legacy ASCII VTK STRUCTURED_POINTS file over the whole duct."""
    out = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {mesh.nx + 1} {mesh.ny + 1} 1",
        "ORIGIN 0 0 0",
        f"SPACING {mesh.h!r} {mesh.h!r} 1",
    ]
    if point_data:
        out.append(f"POINT_DATA {mesh.n_nodes}")
        for name, values in point_data.items():
            out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            out += [FLOAT_FMT % v for v in np.asarray(values, dtype=float)]
    if cell_data:
        out.append(f"CELL_DATA {mesh.n_elements}")
        for name, values in cell_data.items():
            out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            out += [FLOAT_FMT % v for v in np.asarray(values, dtype=float)]
    atomic_write_bytes(path, ("\n".join(out) + "\n").encode())


def read_vtk_scalars(path) -> dict:
    """Scalars of a file written by ``write_vtk`` (for tests and tooling)."""
    lines = Path(path).read_text().splitlines()
    out, i = {}, 0
    while i < len(lines):
        if lines[i].startswith("SCALARS"):
            name = lines[i].split()[1]
            i += 2
            vals = []
            while i < len(lines) and lines[i] and lines[i][0] in "-+0123456789.":
                vals.append(float(lines[i]))
                i += 1
            out[name] = np.array(vals)
        else:
            i += 1
    return out


def write_manifest(path, config_text: str, digest: str, extra: dict | None = None) -> None:
    import scipy

    from . import __version__

    info = {
        "config_sha256": digest,
        "cutvibro": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }
    info.update(extra or {})
    body = "".join(f"{k} = {v}\n" for k, v in info.items())
    atomic_write_bytes(path, (body + "\n[config]\n" + config_text).encode())
