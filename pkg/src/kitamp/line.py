"""Stub-loaded inverted-microstrip artificial line.

Geometry and line quantities here are SI (m, H/m, F/m, Hz, ohm).  Film
parameters come in through :class:`kitamp.kinetics.FilmProperties` in that
module's units and are converted at the boundary.
"""

from __future__ import annotations

import math
from decimal import Decimal
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np
from scipy.constants import epsilon_0
from scipy.optimize import brentq

from .errors import (
    FrequencyMismatchError,
    InvalidParameterError,
    OutOfRangeError,
    SolverError,
    StopBandError,
)
from .kinetics import BiasPoint, FilmProperties, biased_inductance

PH = 1e-12

# |(A+D)/2| may exceed 1 by rounding on long cascades; beyond this it is a gap
BLOCH_TOL = 1e-9

DEFAULT_GRID = (0.1e9, 16e9, 2e6)
TARGET_STOPBAND_CENTER = 10.75e9


@dataclass(frozen=True)
class CellGeometry:
    """One unit cell: a centre strip with open-ended fingers to the ground plane.

    Lengths in metres.  ``finger_width`` defaults to the centre-strip width.
    ``fringing`` multiplies every parallel-plate capacitance.
    """

    width: float
    spacing: float
    dielectric_thickness: float
    permittivity: float
    finger_length: float
    fingers_per_cell: int = 2
    finger_width: float | None = None
    fringing: float = 1.0

    def __post_init__(self):
        for name in ("width", "spacing", "dielectric_thickness", "fringing"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")
        if self.finger_length < 0 or self.fingers_per_cell < 0:
            raise InvalidParameterError("finger length and count must be non-negative")
        if self.finger_width is not None and not self.finger_width > 0:
            raise InvalidParameterError("finger_width must be positive")
        if not self.permittivity >= 1:
            raise InvalidParameterError(f"relative permittivity must be >= 1, got {self.permittivity}")

    @property
    def pitch(self) -> float:
        return self.width + self.spacing

    @property
    def stub_width(self) -> float:
        return self.width if self.finger_width is None else self.finger_width

    def with_finger_length(self, length: float) -> CellGeometry:
        return replace(self, finger_length=length)

    def with_permittivity(self, er: float) -> CellGeometry:
        return replace(self, permittivity=er)


@dataclass(frozen=True)
class SupercellSpec:
    unloaded: CellGeometry
    loaded: CellGeometry
    n_unloaded: int = 30
    n_loaded: int = 6
    n_supercells: int = 1200
    stub_model: str = "distributed"

    def __post_init__(self):
        if self.n_unloaded < 0 or self.n_loaded < 0 or self.n_unloaded + self.n_loaded == 0:
            raise InvalidParameterError("supercell needs at least one cell")
        if self.n_supercells < 1:
            raise InvalidParameterError("need at least one supercell")
        if self.stub_model not in ("distributed", "lumped"):
            raise InvalidParameterError(f"unknown stub model {self.stub_model!r}")

    # decimal arithmetic on the pitch reprs so 1200*36*2um is exactly 0.0864
    def _decimal_supercell(self) -> Decimal:
        return (self.n_unloaded * Decimal(repr(self.unloaded.pitch))
                + self.n_loaded * Decimal(repr(self.loaded.pitch)))

    @property
    def supercell_length(self) -> float:
        return float(self._decimal_supercell())

    @property
    def total_length(self) -> float:
        return float(self.n_supercells * self._decimal_supercell())


@dataclass(frozen=True)
class LineSection:
    inductance: float   # H/m
    capacitance: float  # F/m
    length: float = 0.0  # m

    def __post_init__(self):
        if not (self.inductance > 0 and self.capacitance > 0):
            raise InvalidParameterError("per-unit-length L and C must be positive")
        if self.length < 0:
            raise InvalidParameterError("section length must be non-negative")

    @property
    def impedance(self) -> float:
        return characteristic_impedance(self)

    @property
    def phase_velocity(self) -> float:
        return 1.0 / math.sqrt(self.inductance * self.capacitance)


@dataclass
class TwoPortABCD:
    """ABCD matrices, shape ``(..., 2, 2)``, at the frequencies ``frequency``."""

    matrix: np.ndarray
    frequency: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        self.frequency = np.asarray(self.frequency, dtype=float)

    @property
    def A(self):
        return self.matrix[..., 0, 0]

    @property
    def B(self):
        return self.matrix[..., 0, 1]

    @property
    def C(self):
        return self.matrix[..., 1, 0]

    @property
    def D(self):
        return self.matrix[..., 1, 1]

    def det(self):
        return self.A * self.D - self.B * self.C

    @classmethod
    def identity(cls, frequency) -> TwoPortABCD:
        f = np.asarray(frequency, dtype=float)
        m = np.zeros(f.shape + (2, 2), dtype=complex)
        m[..., 0, 0] = m[..., 1, 1] = 1.0
        return cls(m, f)

    def __matmul__(self, other: TwoPortABCD) -> TwoPortABCD:
        return cascade([self, other])


def inductance_per_length(film: FilmProperties, bias: BiasPoint | float | None = None,
                          width: float | None = None) -> float:
    """Series kinetic inductance per unit length (H/m) of a strip of ``width`` metres."""
    w = film.width_um * 1e-6 if width is None else width
    if not w > 0:
        raise InvalidParameterError("strip width must be positive")
    return biased_inductance(film, _idc(bias)) * PH / w


def _idc(bias) -> float:
    if bias is None:
        return 0.0
    if isinstance(bias, BiasPoint):
        return bias.dc_current_mA
    return float(bias)


def capacitance_per_length(cell: CellGeometry) -> float:
    """Parallel-plate shunt capacitance per unit length (F/m), fingers included."""
    eff_width = cell.width + cell.fingers_per_cell * cell.finger_length * cell.stub_width / cell.pitch
    return cell.fringing * cell.permittivity * epsilon_0 * eff_width / cell.dielectric_thickness


def characteristic_impedance(section: LineSection | None = None, *,
                             inductance: float | None = None,
                             capacitance: float | None = None) -> float:
    if section is not None:
        inductance, capacitance = section.inductance, section.capacitance
    if inductance is None or capacitance is None or not (inductance > 0 and capacitance > 0):
        raise InvalidParameterError("per-unit-length L and C must be positive")
    return math.sqrt(inductance / capacitance)


def cell_section(cell: CellGeometry, film: FilmProperties,
                 bias: BiasPoint | float | None = None) -> LineSection:
    """Homogenized section for one cell (fingers folded into C)."""
    return LineSection(
        inductance_per_length(film, bias, cell.width),
        capacitance_per_length(cell),
        cell.pitch,
    )


def cell_impedance(cell: CellGeometry, film: FilmProperties,
                   bias: BiasPoint | float | None = None) -> float:
    return characteristic_impedance(cell_section(cell, film, bias))


def abcd_of_section(section: LineSection, f) -> TwoPortABCD:
    """Lossless transmission-line two-port of length ``section.length``."""
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise InvalidParameterError("frequency must be positive")
    z0 = characteristic_impedance(section)
    theta = 2 * np.pi * f * section.length / section.phase_velocity
    return _line_abcd(z0, theta, f)


def _line_abcd(z0, theta, f) -> TwoPortABCD:
    c, s = np.cos(theta), np.sin(theta)
    m = np.empty(np.shape(theta) + (2, 2), dtype=complex)
    m[..., 0, 0] = c
    m[..., 0, 1] = 1j * z0 * s
    m[..., 1, 0] = 1j * s / z0
    m[..., 1, 1] = c
    return TwoPortABCD(m, f)


def _shunt_abcd(y, f) -> TwoPortABCD:
    m = np.zeros(np.shape(y) + (2, 2), dtype=complex)
    m[..., 0, 0] = m[..., 1, 1] = 1.0
    m[..., 1, 0] = y
    return TwoPortABCD(m, f)


def cascade(blocks: Sequence[TwoPortABCD]) -> TwoPortABCD:
    """Ordered product of two-ports evaluated on the same frequency grid."""
    blocks = list(blocks)
    if not blocks:
        raise InvalidParameterError("cascade needs at least one block")
    f0 = blocks[0].frequency
    out = blocks[0].matrix
    for b in blocks[1:]:
        if b.frequency.shape != f0.shape or not np.array_equal(b.frequency, f0):
            raise FrequencyMismatchError("cascaded blocks are not on the same frequency grid")
        out = out @ b.matrix
    return TwoPortABCD(out, f0)


def cell_abcd(cell: CellGeometry, sheet_inductance_pH: float, f,
              stub_model: str = "distributed") -> TwoPortABCD:
    """Symmetric cell: half strip, finger shunt, half strip."""
    f = np.asarray(f, dtype=float)
    omega = 2 * np.pi * f
    eps = cell.fringing * cell.permittivity * epsilon_0 / cell.dielectric_thickness

    l_strip = sheet_inductance_pH * PH / cell.width
    c_strip = eps * cell.width
    half = _line_abcd(math.sqrt(l_strip / c_strip), omega * math.sqrt(l_strip * c_strip) * cell.pitch / 2, f)

    wf = cell.stub_width
    l_stub, c_stub = sheet_inductance_pH * PH / wf, eps * wf
    if cell.fingers_per_cell == 0 or cell.finger_length == 0:
        y = np.zeros_like(omega, dtype=complex)
    elif stub_model == "lumped":
        y = 1j * omega * cell.fingers_per_cell * c_stub * cell.finger_length
    else:
        z_stub = math.sqrt(l_stub / c_stub)
        beta_l = omega * math.sqrt(l_stub * c_stub) * cell.finger_length
        y = cell.fingers_per_cell * 1j * np.tan(beta_l) / z_stub
    return cascade([half, _shunt_abcd(y, f), half])


def supercell_abcd(spec: SupercellSpec, film: FilmProperties, f,
                   bias: BiasPoint | float | None = None) -> TwoPortABCD:
    f = np.atleast_1d(np.asarray(f, dtype=float))
    lk = biased_inductance(film, _idc(bias))
    m = TwoPortABCD.identity(f).matrix
    if spec.n_unloaded:
        mu = cell_abcd(spec.unloaded, lk, f, spec.stub_model).matrix
        m = m @ np.linalg.matrix_power(mu, spec.n_unloaded)
    if spec.n_loaded:
        ml = cell_abcd(spec.loaded, lk, f, spec.stub_model).matrix
        m = m @ np.linalg.matrix_power(ml, spec.n_loaded)
    return TwoPortABCD(m, f)


class DispersionPoint(NamedTuple):
    frequency: float
    bloch_phase: float
    propagating: bool
    half_trace: float


@dataclass(frozen=True)
class Stopband:
    f_low: float
    f_high: float

    @property
    def center(self) -> float:
        return 0.5 * (self.f_low + self.f_high)

    @property
    def width(self) -> float:
        return self.f_high - self.f_low

    def contains(self, f) -> bool | np.ndarray:
        return (np.asarray(f) > self.f_low) & (np.asarray(f) < self.f_high)


@dataclass
class Dispersion:
    """Bloch dispersion of a periodic line on a frequency grid.

    ``bloch_phase`` is unfolded into the extended zone; inside a gap it holds
    the real part (a multiple of pi).  ``half_trace_fn`` evaluates (A+D)/2 at
    arbitrary frequencies and is used for edge refinement when available.
    """

    frequency: np.ndarray
    half_trace: np.ndarray
    bloch_phase: np.ndarray
    propagating: np.ndarray
    cell_length: float
    half_trace_fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False, compare=False)

    def __iter__(self) -> Iterator[DispersionPoint]:
        for row in zip(self.frequency, self.bloch_phase, self.propagating, self.half_trace):
            yield DispersionPoint(float(row[0]), float(row[1]), bool(row[2]), float(row[3]))

    def __len__(self):
        return len(self.frequency)

    @cached_property
    def stopbands(self) -> list[Stopband]:
        return find_stopbands(self)

    def beta(self, f):
        """Propagation constant (rad/m), linear interpolation of the Bloch phase."""
        f = np.asarray(f, dtype=float)
        if np.any(f < self.frequency[0]) or np.any(f > self.frequency[-1]):
            raise OutOfRangeError(
                f"frequency outside the dispersion grid "
                f"[{self.frequency[0]:g}, {self.frequency[-1]:g}] Hz"
            )
        return np.interp(f, self.frequency, self.bloch_phase) / self.cell_length

    def check_propagating(self, f, what: str = "tone"):
        f = np.atleast_1d(np.asarray(f, dtype=float))
        for band in self.stopbands:
            inside = band.contains(f)
            if np.any(inside):
                bad = f[inside][0]
                raise StopBandError(
                    f"{what} at {bad:.6g} Hz lies in the stop band "
                    f"[{band.f_low:.6g}, {band.f_high:.6g}] Hz",
                    bands=self.stopbands,
                )

    @classmethod
    def from_points(cls, points: Sequence[DispersionPoint], cell_length: float = 1.0) -> Dispersion:
        pts = sorted(points, key=lambda p: p.frequency)
        return cls(
            np.array([p.frequency for p in pts], dtype=float),
            np.array([p.half_trace for p in pts], dtype=float),
            np.array([p.bloch_phase for p in pts], dtype=float),
            np.array([p.propagating for p in pts], dtype=bool),
            cell_length,
        )


def frequency_grid(f_lo: float, f_hi: float, step: float) -> np.ndarray:
    """Inclusive grid ``f_lo, f_lo+step, ..., f_hi`` built without accumulation error."""
    if not (step > 0 and f_hi >= f_lo):
        raise InvalidParameterError("grid needs step > 0 and f_hi >= f_lo")
    n = int(math.floor((f_hi - f_lo) / step + 1e-9)) + 1
    return f_lo + step * np.arange(n)


def is_propagating(half_trace) -> np.ndarray:
    return np.abs(half_trace) <= 1.0 + BLOCH_TOL


def _band_steps(x: np.ndarray, prop: np.ndarray) -> np.ndarray:
    """1 at every sample that starts a new band, else 0.

    A band starts after a gap, or where the folded phase reverses direction
    inside a pass band (a zone boundary touched without opening a gap).  For
    a reversal the boundary is placed on the side of the extremum sample that
    keeps the two adjacent phase steps most nearly equal.
    """
    steps = np.zeros(x.shape, dtype=int)
    steps[1:] = prop[1:] & ~prop[:-1]
    theta0 = np.arccos(np.clip(x, -1.0, 1.0))
    d = np.diff(theta0)
    for j in range(1, x.size - 1):
        if not (prop[j - 1] and prop[j] and prop[j + 1]) or d[j - 1] * d[j] >= 0 or abs(x[j]) <= 0.5:
            continue
        edge = 0.0 if x[j] > 0 else np.pi
        before, at, after = (abs(theta0[i] - edge) for i in (j - 1, j, j + 1))
        crossed_before = abs((before + at) - (after - at)) < abs((before - at) - (at + after))
        steps[j if crossed_before else j + 1] += 1
    return steps


def unfold_bloch_phase(half_trace: np.ndarray, start_band: int = 0) -> np.ndarray:
    """Extended-zone Bloch phase from (A+D)/2 sampled on an ascending grid.

    Band ``k`` spans phases ``[k*pi, (k+1)*pi]``; each gap or zone boundary
    crossed on the grid moves to the next band.
    """
    x = np.asarray(half_trace, dtype=float)
    prop = is_propagating(x)
    theta0 = np.arccos(np.clip(x, -1.0, 1.0))
    k = start_band + np.cumsum(_band_steps(x, prop))
    folded = np.where(k % 2 == 0, theta0, np.pi - theta0)
    return np.where(prop, k * np.pi + folded, (k + 1) * np.pi)


def floquet_dispersion(spec: SupercellSpec, film: FilmProperties,
                       bias: BiasPoint | float | None, f_grid) -> Dispersion:
    """Bloch phase per supercell from cos(theta) = (A+D)/2 of one supercell."""
    f = np.asarray(f_grid, dtype=float)
    if f.ndim != 1 or f.size == 0 or np.any(np.diff(f) <= 0) or f[0] <= 0:
        raise InvalidParameterError("frequency grid must be non-empty, positive and ascending")

    def half_trace(freq):
        m = supercell_abcd(spec, film, freq, bias)
        return 0.5 * (m.A + m.D).real

    x = half_trace(f)
    start_band = _band_index_below(half_trace, f[0], f[1] - f[0] if f.size > 1 else DEFAULT_GRID[2])
    return Dispersion(
        frequency=f,
        half_trace=x,
        bloch_phase=unfold_bloch_phase(x, start_band),
        propagating=is_propagating(x),
        cell_length=spec.supercell_length,
        half_trace_fn=half_trace,
    )


def _band_index_below(half_trace, f0: float, step: float) -> int:
    """Number of band changes between ~DC and ``f0`` (for grids not starting near DC)."""
    f_start = min(DEFAULT_GRID[0], f0)
    if f0 - f_start <= step:
        return 0
    aux = np.linspace(f_start, f0, int(math.ceil((f0 - f_start) / min(step, 10e6))) + 1)
    x = half_trace(aux)
    return int(_band_steps(x, is_propagating(x)).sum())


def find_stopbands(dispersion: Dispersion | Sequence[DispersionPoint]) -> list[Stopband]:
    """Contiguous non-propagating runs with edges refined where |(A+D)/2| = 1."""
    if not isinstance(dispersion, Dispersion):
        if len(dispersion) == 0:
            return []
        dispersion = Dispersion.from_points(dispersion)
    f, x, prop = dispersion.frequency, dispersion.half_trace, dispersion.propagating
    if f.size == 0 or prop.all():
        return []
    stop = (~prop).astype(np.int8)
    edges = np.diff(np.concatenate(([0], stop, [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    fn = dispersion.half_trace_fn
    bands = []
    for i0, i1 in zip(starts, ends):
        sign = 1.0 if x[i0] > 0 else -1.0
        f_low = f[0] if i0 == 0 else _refine_edge(f[i0 - 1], f[i0], x[i0 - 1], x[i0], sign, fn)
        f_high = f[-1] if i1 == f.size - 1 else _refine_edge(f[i1 + 1], f[i1], x[i1 + 1], x[i1], sign, fn)
        bands.append(Stopband(float(f_low), float(f_high)))
    return bands


def _refine_edge(f_in, f_out, x_in, x_out, sign, fn):
    """Locate sign*x(f) = 1 between a propagating and an evanescent sample."""
    if fn is None:
        g_in, g_out = sign * x_in - 1.0, sign * x_out - 1.0
        if g_in >= 0:
            return f_in
        return f_in + (f_out - f_in) * (-g_in) / (g_out - g_in)

    def g(freq):
        return sign * float(fn(np.array([freq]))[0]) - 1.0

    if g(f_in) >= 0:
        return f_in
    return brentq(g, f_in, f_out, xtol=1e-3, rtol=4 * np.finfo(float).eps, maxiter=200)


def nearest_stopband(bands: Sequence[Stopband], target: float = TARGET_STOPBAND_CENTER) -> Stopband | None:
    if not bands:
        return None
    return min(bands, key=lambda b: abs(b.center - target))


def phase_mismatch(dispersion: Dispersion, f_s, f_p: float):
    """beta(f_p) - beta(f_s) - beta(f_p - f_s), in rad/m."""
    f_s = np.asarray(f_s, dtype=float)
    if np.any(f_s <= 0) or np.any(f_s >= f_p):
        raise InvalidParameterError("need 0 < f_s < f_p")
    f_i = f_p - f_s
    dispersion.check_propagating(f_p, "pump")
    dispersion.check_propagating(f_s, "signal")
    dispersion.check_propagating(f_i, "idler")
    return dispersion.beta(f_p) - dispersion.beta(f_s) - dispersion.beta(f_i)


def calibrate_permittivity(cell: CellGeometry, film: FilmProperties, target_z0: float = 50.0,
                           bias: BiasPoint | float | None = None) -> float:
    """Relative permittivity at which ``cell`` has characteristic impedance ``target_z0``."""
    if not target_z0 > 0:
        raise InvalidParameterError("target impedance must be positive")
    l = inductance_per_length(film, bias, cell.width)
    c_needed = l / target_z0**2
    return cell.permittivity * c_needed / capacitance_per_length(cell)


def solve_finger_length(cell: CellGeometry, film: FilmProperties, target_z0: float,
                        bounds: tuple[float, float] = (0.0, 100e-6),
                        resolution: float = 1e-9,
                        bias: BiasPoint | float | None = None) -> float:
    """Finger length (m) giving ``target_z0``, by bisection to ``resolution``."""
    lo, hi = bounds

    def z(length):
        return cell_impedance(cell.with_finger_length(length), film, bias)

    z_lo, z_hi = z(lo), z(hi)
    if math.isclose(z_lo, target_z0, rel_tol=1e-12):
        return lo
    if math.isclose(z_hi, target_z0, rel_tol=1e-12):
        return hi
    if not (z_hi < target_z0 < z_lo):
        raise SolverError(
            f"target {target_z0:g} ohm not reachable: finger lengths "
            f"[{lo * 1e6:g}, {hi * 1e6:g}] um give [{z_lo:.6g}, {z_hi:.6g}] ohm"
        )
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if z(mid) > target_z0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
