"""Current-dependent kinetic inductance of thin superconducting films.

Units throughout this module: currents in mA, sheet inductance in pH/sq,
thickness in nm and linewidth in um.  The mixing coefficients therefore come
out in 1/mA (three-wave) and 1/mA**2 (four-wave).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .errors import BiasWarning, InvalidParameterError, OutOfRangeError

# thickness (nm) -> sheet inductance (pH/sq) anchors for NbTiN
DEFAULT_THICKNESS_TABLE: dict[float, float] = {5.0: 100.0, 10.0: 30.0}


@dataclass(frozen=True)
class FilmProperties:
    sheet_inductance_pH: float
    scaling_current_mA: float
    critical_current_mA: float
    thickness_nm: float
    width_um: float = 1.0

    def __post_init__(self):
        for name in ("sheet_inductance_pH", "scaling_current_mA",
                     "critical_current_mA", "thickness_nm", "width_um"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be positive and finite, got {value!r}")
        if self.critical_current_mA >= self.scaling_current_mA:
            raise InvalidParameterError(
                "critical current must be below the scaling current "
                f"({self.critical_current_mA} mA >= {self.scaling_current_mA} mA)"
            )


@dataclass(frozen=True)
class BiasPoint:
    dc_current_mA: float = 0.0
    rf_current_mA: float = 0.0


def _check_istar(istar):
    if not np.all(np.asarray(istar) > 0):
        raise InvalidParameterError(f"scaling current must be positive, got {istar!r}")


def _warn_if_overbiased(film: FilmProperties, idc):
    if np.any(np.abs(idc) >= film.critical_current_mA):
        warnings.warn(
            f"dc bias {idc} mA is at or beyond the critical current "
            f"{film.critical_current_mA} mA; the film would switch to the normal state",
            BiasWarning,
            stacklevel=3,
        )


def biased_inductance(film: FilmProperties, idc):
    """Sheet inductance under dc bias with no rf current, in pH/sq."""
    _warn_if_overbiased(film, idc)
    idc = np.asarray(idc, dtype=float)
    if not np.all(np.isfinite(idc)):
        raise InvalidParameterError("dc current must be finite")
    ld = film.sheet_inductance_pH * (1.0 + idc**2 / film.scaling_current_mA**2)
    return ld if ld.ndim else float(ld)


def total_inductance(film: FilmProperties, bias: BiasPoint):
    """Sheet inductance including the rf current contribution, in pH/sq."""
    ld = biased_inductance(film, bias.dc_current_mA)
    i_rf = np.asarray(bias.rf_current_mA, dtype=float)
    lk = ld * (1.0 + i_rf**2 / film.scaling_current_mA**2)
    return lk if np.ndim(lk) else float(lk)


def epsilon_3wm(idc, istar):
    """Three-wave-mixing coefficient 2*Idc/(I*^2 + Idc^2), in 1/mA."""
    _check_istar(istar)
    idc = np.asarray(idc, dtype=float)
    eps = 2.0 * idc / (np.asarray(istar, dtype=float) ** 2 + idc**2)
    return eps if eps.ndim else float(eps)


def xi_4wm(idc, istar):
    """Four-wave-mixing coefficient 1/(I*^2 + Idc^2), in 1/mA**2."""
    _check_istar(istar)
    idc = np.asarray(idc, dtype=float)
    xi = 1.0 / (np.asarray(istar, dtype=float) ** 2 + idc**2)
    return xi if xi.ndim else float(xi)


def sheet_inductance_from_table(thickness_nm: float,
                                table: Mapping[float, float] | None = None) -> float:
    """Piecewise log-log interpolation of sheet inductance versus thickness."""
    table = DEFAULT_THICKNESS_TABLE if table is None else table
    if len(table) < 2:
        raise InvalidParameterError("thickness table needs at least two anchors")
    t = np.array(sorted(table), dtype=float)
    lk = np.array([table[k] for k in sorted(table)], dtype=float)
    if not (t[0] <= thickness_nm <= t[-1]):
        raise OutOfRangeError(
            f"thickness {thickness_nm} nm outside the tabulated range "
            f"[{t[0]:g}, {t[-1]:g}] nm"
        )
    return float(np.exp(np.interp(np.log(thickness_nm), np.log(t), np.log(lk))))


def scale_with_geometry(reference: FilmProperties, new_thickness_nm: float,
                        new_width_um: float,
                        table: Mapping[float, float] | None = None) -> FilmProperties:
    """Rescale a film to a new cross-section.

    The scaling and critical currents follow the cross-sectional area t*w.
    The sheet inductance is taken from the thickness table, anchored to the
    reference film so that the reference is reproduced exactly.
    """
    if new_thickness_nm <= 0 or new_width_um <= 0:
        raise InvalidParameterError("new thickness and width must be positive")
    area_ratio = (new_thickness_nm * new_width_um) / (reference.thickness_nm * reference.width_um)
    if new_thickness_nm == reference.thickness_nm:
        lk = reference.sheet_inductance_pH
    else:
        lk = reference.sheet_inductance_pH * (
            sheet_inductance_from_table(new_thickness_nm, table)
            / sheet_inductance_from_table(reference.thickness_nm, table)
        )
    return replace(
        reference,
        sheet_inductance_pH=lk,
        scaling_current_mA=reference.scaling_current_mA * area_ratio,
        critical_current_mA=reference.critical_current_mA * area_ratio,
        thickness_nm=new_thickness_nm,
        width_um=new_width_um,
    )


def relative_pump_power(reference: FilmProperties, film: FilmProperties) -> float:
    """Pump power needed by ``film`` relative to ``reference`` (same L_k target).

    Pump power goes as I*^2 and dc bias as I*; absolute power is not predicted.
    """
    return (film.scaling_current_mA / reference.scaling_current_mA) ** 2


def relative_dc_bias(reference: FilmProperties, film: FilmProperties) -> float:
    return film.scaling_current_mA / reference.scaling_current_mA
