"""CSV and Touchstone readers/writers with fixed, reproducible float formatting."""

from __future__ import annotations

import csv
import hashlib
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .gain import GainProfile
from .line import Dispersion, Stopband
from .tdr import ImpedanceProfile, Segment, TDRTrace

FLOAT_FMT = "%.9g"

# stand-in for |S| = 0 in dB-formatted Touchstone files
TOUCHSTONE_FLOOR_DB = -200.0


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return FLOAT_FMT % float(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def read_csv(path, expected_header: Sequence[str]) -> np.ndarray:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if header != list(expected_header):
            raise DataError(f"{path}: expected header {','.join(expected_header)!r}, got {','.join(header)!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    return np.array(rows, dtype=float).reshape(-1, len(expected_header))


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


DISPERSION_HEADER = ("frequency_hz", "bloch_phase_rad", "propagating")
STOPBAND_HEADER = ("f_low_hz", "f_high_hz")
GAIN_HEADER = ("frequency_hz", "gain_db")
SCAN_HEADER = ("frequency_hz", "p_out_pos1", "p_out_pos2", "p_out_pos3")
FIT_HEADER = ("frequency_hz", "gc_db", "nsigma_quanta", "nsigma_kelvin")
TRACE_HEADER = ("time_s", "rho")
PROFILE_HEADER = ("segment_index", "z0_ohm", "delay_s")


def write_dispersion(path, dispersion: Dispersion) -> Path:
    return write_csv(path, DISPERSION_HEADER,
                     zip(dispersion.frequency, dispersion.bloch_phase, dispersion.propagating))


def write_stopbands(path, bands: Sequence[Stopband]) -> Path:
    return write_csv(path, STOPBAND_HEADER, ((b.f_low, b.f_high) for b in bands))


def write_gain(path, profile: GainProfile) -> Path:
    return write_csv(path, GAIN_HEADER, zip(profile.frequency, profile.gain_db))


def read_gain(path) -> GainProfile:
    data = read_csv(path, GAIN_HEADER)
    return GainProfile(data[:, 0], data[:, 1])


def write_touchstone(path, profile: GainProfile, z_ref: float = 50.0) -> Path:
    """Two-port file with the pump-on S21; reflections zero, S12 unity."""
    s21 = profile.s21 if profile.s21 is not None else 10 ** (profile.gain_db / 20)
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("! simulated pump-on transmission; pump-off taken as lossless unity\n")
        fh.write(f"# HZ S DB R {z_ref:g}\n")
        for f, s in zip(profile.frequency, s21):
            if not np.isfinite(s):
                continue
            mag_db = 20 * np.log10(abs(s))
            ang = np.degrees(np.angle(s))
            cols = [f, TOUCHSTONE_FLOOR_DB, 0.0, mag_db, ang, 0.0, 0.0, TOUCHSTONE_FLOOR_DB, 0.0]
            fh.write(" ".join(fmt(v) for v in cols) + "\n")
    return path


def read_touchstone_s21(path) -> tuple[np.ndarray, np.ndarray]:
    """Frequencies (Hz) and complex S21 from a v1 two-port file in DB format."""
    freqs, s21 = [], []
    scale = 1.0
    with Path(path).open() as fh:
        for line in fh:
            line = line.split("!", 1)[0].strip()
            if not line:
                continue
            if line.startswith("#"):
                tokens = line[1:].upper().split()
                if "DB" not in tokens or "S" not in tokens:
                    raise DataError("only S-parameter files in DB format are supported")
                scale = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}[tokens[0]]
                continue
            vals = [float(v) for v in line.split()]
            if len(vals) != 9:
                raise DataError(f"expected 9 columns per two-port row, got {len(vals)}")
            freqs.append(vals[0] * scale)
            s21.append(10 ** (vals[3] / 20) * np.exp(1j * np.radians(vals[4])))
    return np.array(freqs), np.array(s21)


def write_trace(path, trace: TDRTrace) -> Path:
    return write_csv(path, TRACE_HEADER, zip(trace.time, trace.rho))


def read_trace(path) -> TDRTrace:
    data = read_csv(path, TRACE_HEADER)
    return TDRTrace(data[:, 0], data[:, 1])


def write_profile(path, profile: ImpedanceProfile) -> Path:
    return write_csv(path, PROFILE_HEADER,
                     ((i, s.impedance, s.delay) for i, s in enumerate(profile.segments)))


def read_profile(path, reference: float = 50.0) -> ImpedanceProfile:
    data = read_csv(path, PROFILE_HEADER)
    order = np.argsort(data[:, 0], kind="stable")
    return ImpedanceProfile(tuple(Segment(z, d) for _, z, d in data[order]), reference)


def read_scan(path) -> tuple[np.ndarray, np.ndarray]:
    """Noise scan: frequencies and an (n, 3) array of output powers per switch position."""
    data = read_csv(path, SCAN_HEADER)
    if np.any(np.diff(data[:, 0]) <= 0):
        order = np.argsort(data[:, 0], kind="stable")
        data = data[order]
    return data[:, 0], data[:, 1:]


def write_scan(path, frequency, powers) -> Path:
    return write_csv(path, SCAN_HEADER, ((f, *p) for f, p in zip(frequency, powers)))
