"""Three-wave-mixing gain along a dc-biased kinetic-inductance line.

Coupled-mode equations for pump, signal and idler envelopes::

    da_s/dx = i g a_p conj(a_i) exp(+i dbeta x)
    da_i/dx = i g a_p conj(a_s) exp(+i dbeta x)
    da_p/dx = i g a_s a_i       exp(-i dbeta x)

with ``dbeta = beta_p - beta_s - beta_i``.  Amplitudes are peak rf currents
(mA) rescaled by ``sqrt(beta_p / beta_j)`` so that ``|a_j|**2`` is
proportional to photon flux; the pump amplitude at the input therefore equals
the pump current.  In that normalization all three couplings collapse to the
single value ``g = (epsilon / 4) * sqrt(beta_s * beta_i)`` and the
Manley-Rowe invariants ``|a_s|^2 - |a_i|^2`` and ``|a_p|^2 + |a_s|^2`` are
exact for the continuous system.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, InvalidParameterError, RegenerationWarning, StepSizeError
from .kinetics import FilmProperties, epsilon_3wm
from .line import (
    DEFAULT_GRID,
    Dispersion,
    SupercellSpec,
    floquet_dispersion,
    frequency_grid,
)

DEFAULT_SIGNAL_MA = 1e-6
MAX_STEP_GROWTH = 0.10


@dataclass(frozen=True)
class PumpConfig:
    frequency: float          # Hz
    current_mA: float = 0.0   # rf amplitude at the line input
    idc_mA: float = 0.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise InvalidParameterError("pump frequency must be positive")
        if self.current_mA < 0:
            raise InvalidParameterError("pump current must be non-negative")


@dataclass
class CMEState:
    x: float
    a_p: np.ndarray
    a_s: np.ndarray
    a_i: np.ndarray

    @property
    def signal_flux_difference(self):
        return np.abs(self.a_s) ** 2 - np.abs(self.a_i) ** 2

    @property
    def pump_signal_flux(self):
        return np.abs(self.a_p) ** 2 + np.abs(self.a_s) ** 2


@dataclass
class GainProfile:
    frequency: np.ndarray
    gain_db: np.ndarray
    s21: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def _finite(self):
        return np.isfinite(self.gain_db)

    @property
    def peak_index(self) -> int:
        g = np.where(self._finite(), self.gain_db, -np.inf)
        return int(np.argmax(g))

    @property
    def peak_frequency(self) -> float:
        return float(self.frequency[self.peak_index])

    @property
    def peak_gain_db(self) -> float:
        return float(self.gain_db[self.peak_index])

    def bandwidth_3db(self) -> tuple[float, float]:
        """Contiguous interval around the peak where gain stays within 3 dB of it."""
        ok = self._finite() & (self.gain_db >= self.peak_gain_db - 3.0)
        i = j = self.peak_index
        while i > 0 and ok[i - 1]:
            i -= 1
        while j < len(ok) - 1 and ok[j + 1]:
            j += 1
        return float(self.frequency[i]), float(self.frequency[j])


def cme_coupling(epsilon, beta_s, beta_i):
    """Photon-flux coupling (1/(m*mA)) for three-wave mixing."""
    return 0.25 * np.asarray(epsilon) * np.sqrt(np.asarray(beta_s) * np.asarray(beta_i))


def _rhs(x, a_p, a_s, a_i, g, dbeta, undepleted):
    ph = np.exp(1j * dbeta * x)
    ds = 1j * g * a_p * np.conj(a_i) * ph
    di = 1j * g * a_p * np.conj(a_s) * ph
    dp = np.zeros_like(a_p) if undepleted else 1j * g * a_s * a_i * np.conj(ph)
    return dp, ds, di


def rk4_cme(a_p0, a_s0, a_i0, g, dbeta, length: float, n_steps: int,
            undepleted: bool = False, record: bool = False):
    """Fixed-step classical RK4 integration of the coupled-mode equations.

    Returns the terminal :class:`CMEState`; with ``record`` also a list of
    states at every step (including x=0).
    """
    if not length > 0:
        raise InvalidParameterError("line length must be positive")
    if n_steps < 1:
        raise InvalidParameterError("need at least one integration step")
    g, dbeta = np.broadcast_arrays(np.asarray(g, dtype=float), np.asarray(dbeta, dtype=float))
    shape = g.shape
    a = [np.broadcast_to(np.asarray(v, dtype=complex), shape).copy() for v in (a_p0, a_s0, a_i0)]
    h = length / n_steps
    history = [CMEState(0.0, *(v.copy() for v in a))] if record else None
    for n in range(n_steps):
        x = n * h
        k1 = _rhs(x, *a, g, dbeta, undepleted)
        k2 = _rhs(x + h / 2, *(v + h / 2 * k for v, k in zip(a, k1)), g, dbeta, undepleted)
        k3 = _rhs(x + h / 2, *(v + h / 2 * k for v, k in zip(a, k2)), g, dbeta, undepleted)
        k4 = _rhs(x + h, *(v + h * k for v, k in zip(a, k3)), g, dbeta, undepleted)
        new = [v + h / 6 * (c1 + 2 * c2 + 2 * c3 + c4) for v, c1, c2, c3, c4 in zip(a, k1, k2, k3, k4)]
        old_s = np.abs(a[1])
        grown = np.abs(new[1]) > (1 + MAX_STEP_GROWTH) * old_s
        if np.any(grown & (old_s > 0)):
            raise StepSizeError(
                f"signal amplitude grew by more than {MAX_STEP_GROWTH:.0%} in one step "
                f"of {h:.3g} m; increase the number of integration steps"
            )
        a = new
        if record:
            history.append(CMEState((n + 1) * h, *(v.copy() for v in a)))
    final = CMEState(length, *a)
    return (final, history) if record else final


def integrate_cmes(dispersion: Dispersion, film: FilmProperties, pump: PumpConfig, f_s,
                   length: float, n_steps: int = 1200, signal_mA: float = DEFAULT_SIGNAL_MA,
                   undepleted: bool = False, record: bool = False):
    """Propagate pump, signal and idler through ``length`` metres of line.

    ``f_s`` may be an array; every frequency is integrated independently.
    Tones inside a stop band raise :class:`~kitamp.errors.StopBandError`.
    """
    f_s = np.asarray(f_s, dtype=float)
    f_p = pump.frequency
    if np.any(f_s <= 0) or np.any(f_s >= f_p):
        raise InvalidParameterError("signal frequency must lie in (0, f_p)")
    dispersion.check_propagating(f_p, "pump")
    dispersion.check_propagating(f_s, "signal")
    dispersion.check_propagating(f_p - f_s, "idler")
    beta_p = dispersion.beta(f_p)
    beta_s = dispersion.beta(f_s)
    beta_i = dispersion.beta(f_p - f_s)
    g = cme_coupling(epsilon_3wm(pump.idc_mA, film.scaling_current_mA), beta_s, beta_i)
    dbeta = beta_p - beta_s - beta_i
    return rk4_cme(pump.current_mA, signal_mA, 0.0, g, dbeta, length, n_steps, undepleted, record)


def undepleted_gain(g, pump_mA, length, dbeta=0.0):
    """Closed-form signal power gain (linear) with a constant pump."""
    kappa = np.asarray(g) * pump_mA
    dbeta = np.asarray(dbeta, dtype=float)
    gam = np.sqrt((kappa**2 - (dbeta / 2) ** 2).astype(complex))
    # sinh(gam L)/gam -> L as gam -> 0
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(np.abs(gam) > 0, np.sinh(gam * length) / np.where(gam == 0, 1, gam), length)
    amp = np.cosh(gam * length) - 1j * (dbeta / 2) * sinc
    return np.abs(amp) ** 2


def gain_profile(spec: SupercellSpec, film: FilmProperties, pump: PumpConfig, f_grid, *,
                 dispersion: Dispersion | None = None, steps_per_supercell: int = 1,
                 signal_mA: float = DEFAULT_SIGNAL_MA, undepleted: bool = False) -> GainProfile:
    """Signal gain ``|a_s(L)/a_s(0)|^2`` in dB across ``f_grid``.

    Grid points whose signal or idler falls in a stop band are returned as NaN.
    """
    f = np.asarray(f_grid, dtype=float)
    if dispersion is None:
        dispersion = floquet_dispersion(spec, film, pump.idc_mA, default_dispersion_grid(pump.frequency))
    dispersion.check_propagating(pump.frequency, "pump")

    valid = (f > 0) & (f < pump.frequency)
    for band in dispersion.stopbands:
        valid &= ~band.contains(f) & ~band.contains(pump.frequency - f)
    gain_db = np.full(f.shape, np.nan)
    s21 = np.full(f.shape, np.nan, dtype=complex)
    if valid.any():
        state = integrate_cmes(
            dispersion, film, pump, f[valid], spec.total_length,
            n_steps=steps_per_supercell * spec.n_supercells,
            signal_mA=signal_mA, undepleted=undepleted,
        )
        ratio = state.a_s / signal_mA
        s21[valid] = ratio
        gain_db[valid] = 10 * np.log10(np.abs(ratio) ** 2)
    return GainProfile(
        frequency=f,
        gain_db=gain_db,
        s21=s21,
        metadata={
            "pump_frequency_hz": pump.frequency,
            "pump_current_mA": pump.current_mA,
            "dc_bias_mA": pump.idc_mA,
            "line_length_m": spec.total_length,
        },
    )


def default_dispersion_grid(f_pump: float) -> np.ndarray:
    lo, hi, step = DEFAULT_GRID
    return frequency_grid(lo, max(hi, 1.05 * f_pump), step)


def pump_on_off_gain(s21_on, s21_off, frequency) -> GainProfile:
    """Measured gain as the pointwise ratio of pump-on to pump-off transmission."""
    on = np.asarray(s21_on, dtype=complex)
    off = np.asarray(s21_off, dtype=complex)
    f = np.asarray(frequency, dtype=float)
    if on.shape != off.shape or on.shape != f.shape:
        raise DataError("pump-on, pump-off and frequency grids must have equal shape")
    zero = np.abs(off) == 0
    if zero.any():
        raise DataError(f"pump-off transmission is zero at {f[zero][0]:.9g} Hz")
    gain_db = 20 * np.log10(np.abs(on) / np.abs(off))
    return GainProfile(f, gain_db, on / off, {"source": "pump on/off ratio"})


def ripple_estimate(gain_db: float, gamma_in: complex, gamma_out: complex) -> float:
    """Peak-to-peak gain ripple (dB) from end reflections.

    Forward pass is amplified, the backward pass is not, so the round-trip
    amplitude is ``|gamma_in * gamma_out| * sqrt(G)``.
    """
    if abs(gamma_in) >= 1 or abs(gamma_out) >= 1:
        raise InvalidParameterError("reflection coefficients must satisfy |gamma| < 1")
    r = abs(gamma_in * gamma_out) * 10 ** (gain_db / 20)
    if r >= 1:
        warnings.warn(f"round-trip gain {r:.3g} >= 1: regenerative, ripple unbounded",
                      RegenerationWarning, stacklevel=2)
        return math.inf
    return 20 * math.log10((1 + r) / (1 - r))


def pump_power_dbm(current_mA: float, z0: float) -> float:
    """Pump power P = Ip^2 Z0 / 2 in dBm for a peak current in mA."""
    p = (current_mA * 1e-3) ** 2 * z0 / 2
    return 10 * math.log10(p / 1e-3) if p > 0 else -math.inf


def pump_current_from_dbm(power_dbm: float, z0: float) -> float:
    return math.sqrt(2 * 1e-3 * 10 ** (power_dbm / 10) / z0) * 1e3


def pump_for_peak_gain(spec: SupercellSpec, film: FilmProperties, pump: PumpConfig,
                       target_db: float, f_grid, dispersion: Dispersion | None = None,
                       bounds: tuple[float, float] = (0.0, 1.0), tol_mA: float = 1e-5) -> float:
    """Pump current (mA) whose profile peaks at ``target_db``, by bisection."""
    if dispersion is None:
        dispersion = floquet_dispersion(spec, film, pump.idc_mA, default_dispersion_grid(pump.frequency))

    def peak(ip):
        prof = gain_profile(spec, film, PumpConfig(pump.frequency, ip, pump.idc_mA), f_grid,
                            dispersion=dispersion, undepleted=True)
        return prof.peak_gain_db

    lo, hi = bounds
    if peak(hi) < target_db:
        raise InvalidParameterError(f"{target_db} dB not reached with pump up to {hi} mA")
    while hi - lo > tol_mA:
        mid = 0.5 * (lo + hi)
        if peak(mid) < target_db:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
