"""OBJ and CSV writers for curves, point sets and ruled disks."""

import csv
from pathlib import Path

import numpy as np


def _num(v):
    return repr(float(v))


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_csv(path):
    """Header and float rows of a CSV written by ``write_csv``."""
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(v) for v in row] for row in r]
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def write_polylines_csv(path, polylines, labels):
    """One row per sample: polyline index, sample index, coordinates."""
    rows = []
    for c, P in enumerate(polylines):
        for i, p in enumerate(np.asarray(P)):
            rows.append([c, i] + [float(v) for v in p])
    return write_csv(path, ["curve", "sample"] + list(labels), rows)


def write_obj(path, verts, faces=(), lines=(), name="mesh"):
    """OBJ text: 'v' vertices, 'f' faces, 'l' polylines (1-based indices)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    V = np.asarray(verts, dtype=float)
    if V.ndim == 2 and V.shape[1] < 3:
        V = np.hstack([V, np.zeros((len(V), 3 - V.shape[1]))])
    with path.open("w") as fh:
        fh.write(f"# linkcalc export\no {name}\n")
        for v in V:
            fh.write("v " + " ".join(_num(c) for c in v[:3]) + "\n")
        for f in faces:
            fh.write("f " + " ".join(str(i + 1) for i in f) + "\n")
        for ln in lines:
            fh.write("l " + " ".join(str(i + 1) for i in ln) + "\n")
    return path


def read_obj(path):
    verts, faces, lines = [], [], []
    for raw in Path(path).read_text().splitlines():
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(c) for c in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(i) - 1 for i in parts[1:]])
        elif parts[0] == "l":
            lines.append([int(i) - 1 for i in parts[1:]])
    return np.array(verts), faces, lines


def export_disk(directory, stem, disk):
    """Mesh of the ruled disk, its boundary polylines and the parameter
    curve.  Returns the written paths (none for an empty disk)."""
    if disk.is_empty:
        return []
    d = Path(directory)
    V, faces = disk.mesh()
    out = [write_obj(d / f"{stem}_disk.obj", V, faces, name=stem)]
    out.append(write_polylines_csv(d / f"{stem}_boundary.csv", disk.boundary(),
                                   [f"p{a + 1}" for a in range(V.shape[1])]))
    curves = disk.curves
    out.append(write_polylines_csv(d / f"{stem}_circle.csv", [c.points for c in curves],
                                   [f.name for f in curves[0].factors]))
    return out


def export_curves(directory, stem, curves, labels):
    if not curves:
        return []
    return [write_polylines_csv(Path(directory) / f"{stem}_curves.csv",
                                [c.points for c in curves], labels)]


def export_points(directory, stem, points, labels):
    if not points:
        return []
    rows = [[float(v) for v in p.coords] + [int(p.sign)] for p in points]
    return [write_csv(Path(directory) / f"{stem}_points.csv", list(labels) + ["sign"], rows)]


__all__ = ["write_csv", "read_csv", "write_obj", "read_obj", "write_polylines_csv",
           "export_disk", "export_curves", "export_points"]
