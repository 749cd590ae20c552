"""Point-cloud and DaC-diagram file formats."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .dac import DacDiagram
from .geometry import GeometryError, PointCloud
from .persistence import PersistenceDiagram, format_value


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def parse_point_cloud(text: str) -> PointCloud:
    """One point per row, D numeric columns; a non-numeric first row is a header."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise GeometryError("no points in input")
    if not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    try:
        pts = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise GeometryError(f"non-numeric coordinate: {exc}") from None
    if pts.ndim != 2:
        raise GeometryError("rows have differing numbers of columns")
    return PointCloud(pts)


def read_point_cloud(path) -> PointCloud:
    return parse_point_cloud(Path(path).read_text())


def format_point_cloud(cloud: PointCloud, header=None) -> str:
    header = header or [f"x{a}" for a in range(cloud.dim)]
    lines = [",".join(header)]
    lines += [",".join(repr(float(v)) for v in row) for row in cloud.points]
    return "\n".join(lines) + "\n"


def write_point_cloud(cloud: PointCloud, path, header=None) -> None:
    Path(path).write_text(format_point_cloud(cloud, header))


def read_diagram(path) -> PersistenceDiagram:
    return PersistenceDiagram.from_csv(Path(path))


def format_dac_csv(dac: DacDiagram) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["dim", "birth", "death", "kind", "provenance"])
    for r, b, d, kind, prov in dac.rows():
        w.writerow([r, format_value(b), format_value(d), kind, prov])
    return out.getvalue()


def dac_records(dac: DacDiagram) -> list[dict]:
    return [{"dim": r, "birth": b, "death": None if np.isinf(d) else d, "kind": kind, "provenance": prov}
            for r, b, d, kind, prov in dac.rows()]


def format_json(obj) -> str:
    return json.dumps(obj, indent=2, default=_default)


def _default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serialisable: {type(x).__name__}")
