"""Radiometric noise calibration in photon-occupancy units (quanta).

Quanta include the vacuum half: a thermal mode holds
``n = 1/(exp(hf/kT) - 1) + 1/2``, so the vacuum floor is 0.5 and the standard
quantum limit for a phase-insensitive amplifier is 0.5 added quanta.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.constants import h as PLANCK, k as BOLTZMANN

from .errors import BelowVacuumError, InvalidParameterError, NegativeNoiseWarning, SingularFitError

VACUUM = 0.5
KIT_BAND = (5.5e9, 7.25e9)


@dataclass(frozen=True)
class ThermalStage:
    physical_temperature: float  # K
    attenuation_db: float
    label: str = ""
    extra_loss_db: float = 0.0

    def __post_init__(self):
        if not self.physical_temperature > 0:
            raise InvalidParameterError(f"stage temperature must be positive, got {self.physical_temperature}")
        if self.attenuation_db < 0 or self.extra_loss_db < 0:
            raise InvalidParameterError("attenuation and extra loss must be non-negative")

    @property
    def linear_attenuation(self) -> float:
        return 10 ** ((self.attenuation_db + self.extra_loss_db) / 10)


@dataclass(frozen=True)
class NoiseChain:
    """Input line from a room-temperature termination through cold attenuators.

    Stages are listed warm to cold.
    """

    stages: tuple[ThermalStage, ...]
    source_temperature: float = 293.0

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise InvalidParameterError("noise chain needs at least one stage")
        if self.source_temperature < 0:
            raise InvalidParameterError("source temperature must be non-negative")
        temps = [s.physical_temperature for s in self.stages]
        if any(b > a for a, b in zip(temps, temps[1:])):
            raise InvalidParameterError("stages must be ordered warm to cold")


@dataclass(frozen=True)
class SwitchPositionData:
    n_in_signal: float
    n_in_idler: float
    output_power: float

    def __post_init__(self):
        if self.n_in_signal < VACUUM or self.n_in_idler < VACUUM:
            raise BelowVacuumError("input noise cannot be below the 0.5-quanta vacuum floor")

    @property
    def total_input(self) -> float:
        return self.n_in_signal + self.n_in_idler


@dataclass(frozen=True)
class SystemNoiseFit:
    chain_gain: float
    system_added_noise: float
    residual: float
    warnings: tuple[str, ...] = field(default=())

    @property
    def chain_gain_db(self) -> float:
        return 10 * math.log10(self.chain_gain)


@dataclass(frozen=True)
class AmplifierStage:
    gain_db: float
    added_noise: float  # quanta
    label: str = ""

    def __post_init__(self):
        if not math.isfinite(self.gain_db):
            raise InvalidParameterError("amplifier gain must be finite")
        if self.added_noise < 0:
            raise InvalidParameterError("added noise must be non-negative")


def occupancy(f, T):
    """Mean photon number including the vacuum half, at frequency ``f`` (Hz) and ``T`` (K)."""
    f = np.asarray(f, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(f <= 0):
        raise InvalidParameterError("frequency must be positive")
    if np.any(T < 0):
        raise InvalidParameterError("temperature must be non-negative")
    with np.errstate(divide="ignore", over="ignore"):
        x = PLANCK * f / (BOLTZMANN * T)
        n = 1.0 / np.expm1(x) + VACUUM
    return float(n) if n.ndim == 0 else n


def temperature_from_quanta(n, f):
    """Inverse of :func:`occupancy`: the temperature holding ``n`` quanta at ``f``."""
    n = np.asarray(n, dtype=float)
    f = np.asarray(f, dtype=float)
    if np.any(n <= VACUUM):
        raise BelowVacuumError(f"{n} quanta is at or below the vacuum floor of 0.5")
    T = (PLANCK * f / BOLTZMANN) / np.log1p(1.0 / (n - VACUUM))
    return float(T) if T.ndim == 0 else T


def band_average_occupancy(T: float, band: tuple[float, float] = KIT_BAND, points: int = 2001) -> float:
    """Frequency-averaged occupancy over ``band`` (trapezoid rule)."""
    f = np.linspace(band[0], band[1], points)
    return float(np.trapezoid(occupancy(f, T), f) / (band[1] - band[0]))


def _beam_splitter(n_in, n_thermal, attenuation):
    return n_in / attenuation + (1.0 - 1.0 / attenuation) * n_thermal


def chain_input_noise(chain: NoiseChain, f):
    """Noise quanta delivered at the end of ``chain``.

    Each stage is a beam splitter mixing the incoming noise with the thermal
    occupancy of the stage: ``n_out = n_in / A + (1 - 1/A) n(T)``.
    """
    if chain.source_temperature > 0:
        n = occupancy(f, chain.source_temperature)
    else:
        n = np.full(np.shape(f), VACUUM) if np.ndim(f) else VACUUM
    for stage in chain.stages:
        n = _beam_splitter(n, occupancy(f, stage.physical_temperature), stage.linear_attenuation)
    return n


def idler_frequency(f_s, f_p):
    f_s = np.asarray(f_s, dtype=float)
    if np.any(f_s <= 0) or np.any(f_s >= f_p):
        raise InvalidParameterError("need 0 < f_s < f_p")
    f_i = f_p - f_s
    return float(f_i) if f_i.ndim == 0 else f_i


def yfactor_fit(points: Sequence[SwitchPositionData]) -> SystemNoiseFit:
    """Least-squares fit of ``P_out = G_c (N_s + N_i + N_sigma)`` over switch positions."""
    x = np.array([p.total_input for p in points], dtype=float)
    y = np.array([p.output_power for p in points], dtype=float)
    if len(points) < 2 or np.ptp(x) <= 1e-12 * max(1.0, np.abs(x).max()):
        raise SingularFitError("need at least two distinct total input-noise values")
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.sqrt(np.mean((y - design @ np.array([slope, intercept])) ** 2)))
    if not slope > 0:
        raise SingularFitError(f"fitted chain gain is non-positive ({slope:g})")
    n_sigma = intercept / slope
    notes = ()
    if n_sigma < 0:
        msg = f"fitted system-added noise is negative ({n_sigma:.4g} quanta)"
        warnings.warn(msg, NegativeNoiseWarning, stacklevel=2)
        notes = (msg,)
    return SystemNoiseFit(float(slope), float(n_sigma), resid, notes)


def forward_model(n_signal, n_idler, chain_gain: float, n_sigma: float):
    """Output power predicted by the y-factor model for given inputs."""
    return chain_gain * (np.asarray(n_signal) + np.asarray(n_idler) + n_sigma)


def cascade_added_noise(stages: Sequence[AmplifierStage], isolation_before_stage2_db: float = 0.0) -> float:
    """Added noise of a cascade referred to the first-stage input (Friis, in quanta)."""
    stages = list(stages)
    if not stages:
        raise InvalidParameterError("need at least one amplifier stage")
    if stages[0].gain_db < 0:
        raise InvalidParameterError("first-stage gain must be non-negative (dB)")
    total = stages[0].added_noise
    preceding = 10 ** (stages[0].gain_db / 10) * 10 ** (isolation_before_stage2_db / 10)
    for stage in stages[1:]:
        total += stage.added_noise / preceding
        preceding *= 10 ** (stage.gain_db / 10)
    return total
