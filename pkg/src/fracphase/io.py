"""On-disk formats: binary field snapshots, energy CSV, run manifest.

Snapshot layout (all little-endian)::

    b"FPF1" | u32 nx | u32 ny | f64 time | f64 alpha | nx*ny f64, row-major

Row-major means entry ``[i, j]`` (x index ``i``, y index ``j``) is stored at
position ``i*ny + j``.
"""

from __future__ import annotations

import csv
import math
import struct
from pathlib import Path

import numpy as np

from .diagnostics import EnergyRecorder, SeriesReport
from .models import EnergyValue

MAGIC = b"FPF1"
_HEADER = struct.Struct("<4sIIdd")
CSV_HEADER = ("step", "time", "energy", "grad_part", "bulk_part", "mass", "max_abs")


def snapshot_size(nx: int, ny: int) -> int:
    return _HEADER.size + 8 * nx * ny


def write_snapshot(path, phi: np.ndarray, time: float, alpha: float) -> None:
    nx, ny = phi.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, nx, ny, float(time), float(alpha)))
        fh.write(np.ascontiguousarray(phi, dtype="<f8").tobytes())


def read_snapshot(path) -> tuple[np.ndarray, float, float]:
    """Return ``(phi, time, alpha)``."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated snapshot header")
    magic, nx, ny, time, alpha = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if len(data) != snapshot_size(nx, ny):
        raise ValueError(f"{path}: expected {snapshot_size(nx, ny)} bytes, got {len(data)}")
    phi = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(nx, ny).astype(np.float64)
    return phi, time, alpha


def _fmt(x: float) -> str:
    return "%.17g" % x


def energy_row(step, time, e: EnergyValue, mass, max_abs) -> list[str]:
    return [str(step), _fmt(time), _fmt(e.total), _fmt(e.gradient_part), _fmt(e.bulk_part),
            _fmt(mass), _fmt(max_abs)]


def write_energy_csv(path, report: SeriesReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i in range(len(report)):
            w.writerow(energy_row(report.steps[i], report.times[i], report.energy[i],
                                  report.mass[i], report.max_abs[i]))


def read_energy_csv(path) -> SeriesReport:
    rep = SeriesReport()
    with open(path, newline="") as fh:
        rows = csv.DictReader(fh)
        missing = {"time", "energy"} - set(rows.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for i, row in enumerate(rows):
            def get(key, default=math.nan):
                return float(row[key]) if row.get(key) not in (None, "") else default
            rep.append(int(row.get("step") or i), get("time"),
                       EnergyValue(get("energy"), get("grad_part"), get("bulk_part")),
                       get("mass"), get("max_abs"))
    return rep


class CsvEnergyObserver:
    """Records like :class:`EnergyRecorder` and streams each row to ``path``."""

    def __init__(self, recorder: EnergyRecorder, path):
        self.recorder = recorder
        self.stride = recorder.stride
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(CSV_HEADER)

    @property
    def report(self) -> SeriesReport:
        return self.recorder.report

    def observe(self, state) -> None:
        self.recorder.observe(state)
        r = self.recorder.report
        self._w.writerow(energy_row(r.steps[-1], r.times[-1], r.energy[-1], r.mass[-1], r.max_abs[-1]))
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


class SnapshotWriter:
    def __init__(self, directory, stride: int, alpha: float):
        self.directory = Path(directory)
        self.stride = stride
        self.alpha = alpha

    def observe(self, state) -> None:
        write_snapshot(self.directory / f"snap_{state.step}.fpf", state.phi, state.time, self.alpha)


def write_manifest(path, entries: dict) -> None:
    lines = [f"{k} = {v}" for k, v in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n")
