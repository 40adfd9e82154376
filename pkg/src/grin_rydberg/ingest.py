"""CSV ingestion for measured EIT traces and near-field probe scans."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import DataError, ParseError
from .focal import MEASURED, GainEstimate
from .rydberg import EitSpectrum

SCAN_HEADER = ("x_mm", "y_mm", "z_mm", "amplitude_db")
TRACE_COLUMNS = ("detuning_hz", "transmission")


def _read_rows(path, required: Sequence[str], columns: Optional[Dict[str, str]] = None):
    """Yield ``(line_number, {canonical: float})`` for each data row.

    ``columns`` maps canonical names to the header names used in the file.
    """
    mapping = {name: name for name in required}
    mapping.update(columns or {})
    text = Path(path).read_text(encoding="utf-8-sig")
    lines = text.splitlines()
    if not any(line.strip() for line in lines):
        raise ParseError(f"{path}: file is empty", line=1)
    reader = csv.reader(lines)
    header = None
    rows = []
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if row[0].lstrip().startswith("#"):
            continue
        if header is None:
            header = [cell.strip() for cell in row]
            missing = [mapping[n] for n in required if mapping[n] not in header]
            if missing:
                raise ParseError(f"{path}: missing column(s) {', '.join(missing)}", lineno)
            pos = {n: header.index(mapping[n]) for n in required}
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}: expected {len(header)} fields, got {len(row)}", lineno)
        values = {}
        for name in required:
            cell = row[pos[name]].strip()
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{path}: cannot parse {cell!r} as a number", lineno) from None
            if not math.isfinite(v):
                raise ParseError(f"{path}: non-finite value {cell!r}", lineno)
            values[name] = v
        rows.append((lineno, values))
    if header is None:
        raise ParseError(f"{path}: no header row", 1)
    if not rows:
        raise ParseError(f"{path}: no data rows", len(lines))
    return rows


def load_trace(path, columns: Optional[Dict[str, str]] = None, meta=None) -> EitSpectrum:
    """Read a ``detuning_hz,transmission`` CSV into a sorted EitSpectrum."""
    rows = _read_rows(path, TRACE_COLUMNS, columns)
    x = np.array([r["detuning_hz"] for _, r in rows])
    y = np.array([r["transmission"] for _, r in rows])
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    dup = np.nonzero(np.diff(x) == 0)[0]
    if dup.size:
        line = rows[order[dup[0] + 1]][0]
        raise DataError(f"{path}: duplicate detuning {x[dup[0]]!r} (line {line})")
    info = {"source": str(path)}
    info.update(meta or {})
    return EitSpectrum(x, y, info)


def write_trace(spectrum: EitSpectrum, path) -> Path:
    path = Path(path)
    path.write_text(spectrum.to_csv(), encoding="utf-8")
    return path


@dataclass(frozen=True)
class ScanRecord:
    x: float
    y: float
    z: float
    amplitude_db: float


def load_scan(path, columns: Optional[Dict[str, str]] = None) -> List[ScanRecord]:
    """Read a near-field probe scan (``x_mm,y_mm,z_mm,amplitude_db``)."""
    rows = _read_rows(path, SCAN_HEADER, columns)
    return [ScanRecord(r["x_mm"], r["y_mm"], r["z_mm"], r["amplitude_db"]) for _, r in rows]


def scan_csv(records: Sequence[ScanRecord]) -> str:
    lines = [",".join(SCAN_HEADER)]
    lines += [f"{r.x:.9g},{r.y:.9g},{r.z:.9g},{r.amplitude_db:.9g}" for r in records]
    return "\n".join(lines) + "\n"


def z_cut(records: Sequence[ScanRecord], x: float = 0.0, y: float = 0.0,
          tol: float = 1e-9) -> List[ScanRecord]:
    """Records on the line (x, y) = const, ordered by z (focal-length cut)."""
    sel = [r for r in records if abs(r.x - x) <= tol and abs(r.y - y) <= tol]
    return sorted(sel, key=lambda r: r.z)


def x_cut(records: Sequence[ScanRecord], z: Optional[float] = None, y: float = 0.0,
          tol: float = 1e-9) -> List[ScanRecord]:
    """Records with y, z fixed, ordered by x (beam-waist cut).

    ``z`` defaults to the plane of the strongest record.
    """
    if z is None:
        z = peak_record(records).z
    sel = [r for r in records if abs(r.y - y) <= tol and abs(r.z - z) <= tol]
    return sorted(sel, key=lambda r: r.x)


def peak_record(records: Sequence[ScanRecord]) -> ScanRecord:
    if not records:
        raise DataError("scan has no records")
    return max(records, key=lambda r: r.amplitude_db)


def peak_gain(records: Sequence[ScanRecord]):
    """Largest measured gain and where it occurred.

    Scan amplitudes are dB relative to the no-lens incident level, so the
    maximum is the measured focusing gain.
    """
    rec = peak_record(records)
    return GainEstimate.from_db(rec.amplitude_db, MEASURED), rec
