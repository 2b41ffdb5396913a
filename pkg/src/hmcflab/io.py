"""Plain-text artifacts: surface snapshots, flow traces, family indices and reports.

Floats are written with ``repr`` so every file round-trips bit-exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .ambient import ModelSpace
from .errors import DomainError
from .report import reports_to_csv, reports_to_json
from .surface import RadialSurface, surface_integrals

SNAPSHOT_HEADER = "# hmcflab surface snapshot v1"
TRACE_COLUMNS = ["t", "area", "M", "Gtot", "phi", "kappa_min", "F_max", "dt"]
FAMILY_COLUMNS = ["t", "area", "M", "Gtot", "volume"]


def _floats(values):
    return " ".join(repr(float(v)) for v in np.ravel(values))


def snapshot_text(s: RadialSurface) -> str:
    nt, nph = s.radii.shape
    lines = [
        SNAPSHOT_HEADER,
        f"a = {s.a!r}",
        f"ntheta = {nt}",
        f"nphi = {nph}",
        f"center = {_floats(s.center)}",
        f"frame = {_floats(s.frame)}",
        f"radii = {_floats(s.radii)}",
    ]
    return "\n".join(lines) + "\n"


def parse_snapshot(text: str) -> RadialSurface:
    fields = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise DomainError(f"malformed snapshot line: {raw!r}")
        fields[key.strip()] = value.strip()
    missing = {"a", "ntheta", "nphi", "center", "frame", "radii"} - fields.keys()
    if missing:
        raise DomainError(f"snapshot is missing {sorted(missing)}")
    space = ModelSpace(float(fields["a"]))
    nt, nph = int(fields["ntheta"]), int(fields["nphi"])
    center = np.array([float(v) for v in fields["center"].split()])
    frame = np.array([float(v) for v in fields["frame"].split()]).reshape(3, space.dim)
    radii = np.array([float(v) for v in fields["radii"].split()])
    if radii.size != nt * nph:
        raise DomainError("radii count does not match the grid size")
    return RadialSurface(space, center, frame, radii.reshape(nt, nph))


def write_snapshot(path, s: RadialSurface):
    Path(path).write_text(snapshot_text(s))


def read_snapshot(path) -> RadialSurface:
    return parse_snapshot(Path(path).read_text())


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def write_trace(path, trace):
    """Flow trace CSV with columns ``t,area,M,Gtot,phi,kappa_min,F_max,dt``."""
    _write_rows(path, TRACE_COLUMNS, (s.row() for s in trace.samples))


def read_csv(path):
    """Header and float rows of a CSV written by this module."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def write_family(directory, family):
    """One snapshot per member plus ``index.csv`` (``t,area,M,Gtot,volume``)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for n, (t, member) in enumerate(zip(family.offsets, family.members)):
        write_snapshot(directory / f"member_{n:03d}.txt", member)
        i = surface_integrals(member)[0]
        rows.append([t, i.area, i.M, i.Gtot, i.volume])
    _write_rows(directory / "index.csv", FAMILY_COLUMNS, rows)
    return directory / "index.csv"


def write_reports(json_path=None, csv_path=None, reports=()):
    reports = list(reports)
    if json_path is not None:
        Path(json_path).write_text(reports_to_json(reports) + "\n")
    if csv_path is not None:
        Path(csv_path).write_text(reports_to_csv(reports))
