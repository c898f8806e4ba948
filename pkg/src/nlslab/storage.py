"""On-disk formats: binary snapshots, trajectory folders, report CSVs.

Snapshot layout (little-endian throughout):

    bytes 0..3   magic "NLSF"
    u32          format version (1)
    u32          dimension d
    u32          per-axis size N
    f64          box half-width L
    f64          snapshot time t
    f64 pairs    re/im interleaved, C row-major, N^d entries

CSV cells are written with Python's shortest round-trip float repr, so a
rerun of the same computation produces byte-identical files.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import Field, make_grid
from .dynamics import NLSParams, Termination, Trajectory

__all__ = [
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
    "write_snapshot",
    "read_snapshot",
    "write_csv",
    "read_csv",
    "save_trajectory",
    "load_trajectory",
    "report_filename",
    "write_report",
]

SNAPSHOT_MAGIC = b"NLSF"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIII dd")

INDEX_HEADER = ("time", "mass", "energy", "grad_norm", "sup_grad", "shell_mass")


def write_snapshot(path, field: Field, t: float) -> Path:
    path = Path(path)
    g = field.grid
    payload = np.ascontiguousarray(field.values, dtype=np.complex128).astype("<c16")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, g.d, g.N, g.L, float(t)))
        fh.write(payload.tobytes())
    return path


def read_snapshot(path) -> tuple:
    """Returns ``(field, t)``; refuses foreign or truncated files."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: too short for a snapshot header")
    magic, version, d, n, L, t = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    grid = make_grid(d=int(d), L=float(L), N=int(n))
    expect = _HEADER.size + 16 * n**d
    if len(raw) != expect:
        raise ValueError(f"{path}: payload size {len(raw)} != expected {expect}")
    values = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(grid.shape)
    return Field(grid, values.astype(np.complex128)), float(t)


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([_cell(x) for x in row])
    return path


def read_csv(path) -> tuple:
    """Returns ``(header, rows)`` with every cell still a string."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def save_trajectory(directory, traj: Trajectory, every: int = 1) -> Path:
    """Folder with ``meta.csv``, the diagnostics ``index.csv``, and snapshots.

    ``every`` thins the stored snapshot files (the index always keeps all
    rows); snapshot k lands in ``snap_<k 0-padded>.nlsf``.
    """
    if every < 1:
        raise ValueError("every must be >= 1")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = [
        ("d", traj.grid.d), ("L", traj.grid.L), ("N", traj.grid.N),
        ("dt", traj.dt), ("snapshot_stride", traj.snapshot_stride),
        ("kind", traj.kind), ("terminated_by", traj.terminated_by.value),
        ("every", every),
    ]
    if traj.params is not None:
        meta += [("lam", traj.params.lam), ("sigma", traj.params.sigma)]
    write_csv(directory / "meta.csv", ("key", "value"), meta)
    write_csv(directory / "index.csv", INDEX_HEADER, traj.index_rows())
    for i in range(0, len(traj.times), every):
        write_snapshot(directory / f"snap_{i:06d}.nlsf", traj.snapshots[i], float(traj.times[i]))
    return directory


def load_trajectory(directory) -> Trajectory:
    """Rebuilds a trajectory saved with ``every=1``; partial saves refuse."""
    directory = Path(directory)
    _, meta_rows = read_csv(directory / "meta.csv")
    meta = {k: v for k, v in meta_rows}
    if int(meta.get("every", "1")) != 1:
        raise ValueError("cannot rebuild a trajectory from a thinned save")
    _, rows = read_csv(directory / "index.csv")
    cols = np.array([[float(c) for c in row] for row in rows]).T
    times, mass_h, energy_h, grad_h, sup_h, shell_h = cols
    snapshots = []
    for i in range(len(times)):
        field, t = read_snapshot(directory / f"snap_{i:06d}.nlsf")
        if abs(t - times[i]) > 1e-12:
            raise ValueError(f"snapshot {i} time {t} disagrees with index {times[i]}")
        snapshots.append(field)
    params = None
    if "lam" in meta:
        params = NLSParams(lam=float(meta["lam"]), sigma=float(meta["sigma"]))
    return Trajectory(
        grid=snapshots[0].grid, params=params, dt=float(meta["dt"]),
        snapshot_stride=int(meta["snapshot_stride"]), times=times, snapshots=snapshots,
        mass_history=mass_h, energy_history=energy_h, grad_history=grad_h,
        running_sup_grad=sup_h, shell_history=shell_h,
        terminated_by=Termination(meta["terminated_by"]), kind=meta["kind"],
    )


def report_filename(experiment: str, tag: str, value: Optional[float] = None) -> str:
    """``<experiment>_<tag>[_<value>].csv`` with a compact value spelling."""
    stem = f"{experiment}_{tag}" if tag else experiment
    if value is not None:
        stem += f"_{value:g}"
    return stem + ".csv"


def write_report(directory, experiment: str, tag: str, report, value: Optional[float] = None) -> Path:
    """Any report exposing ``rows()`` and ``header`` lands as one CSV."""
    directory = Path(directory)
    return write_csv(directory / report_filename(experiment, tag, value),
                     report.header, report.rows())
