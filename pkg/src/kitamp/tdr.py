"""Time-domain reflectometry: lattice synthesis and layer-peeling inversion.

Both directions use the same discretization: the line is sliced into thin
layers whose round-trip time equals one sample ``dt`` (a Goupillaud medium).
A segment with one-way delay ``tau`` therefore spans ``2*tau/dt`` layers and
its reflection arrives at the measurement plane at ``t = 2*tau_cumulative``.
The source is matched, so nothing re-reflects at the measurement plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError, NonPassiveDataError, ResolutionError

MIN_SAMPLES_PER_SEGMENT = 4
STEP_THRESHOLD = 0.005
STEP_MIN_SAMPLES = 3


@dataclass(frozen=True)
class Segment:
    impedance: float  # ohm
    delay: float      # one-way, s


@dataclass(frozen=True)
class ImpedanceProfile:
    segments: tuple[Segment, ...]
    reference: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(Segment(*s) if not isinstance(s, Segment) else s
                                                   for s in self.segments))
        if not self.reference > 0:
            raise InvalidParameterError("reference impedance must be positive")
        for s in self.segments:
            if not (s.impedance > 0 and s.delay > 0):
                raise InvalidParameterError(f"segment impedance and delay must be positive: {s}")

    @property
    def impedances(self) -> np.ndarray:
        return np.array([s.impedance for s in self.segments])

    @property
    def delays(self) -> np.ndarray:
        return np.array([s.delay for s in self.segments])

    def interface_times(self) -> np.ndarray:
        """Round-trip arrival time of each interface after the first segment."""
        return 2 * np.cumsum(self.delays)[:-1]

    def mirrored(self) -> ImpedanceProfile:
        """Profile with every impedance replaced by Z_ref**2 / Z."""
        return ImpedanceProfile(tuple(Segment(self.reference**2 / s.impedance, s.delay)
                                      for s in self.segments), self.reference)


@dataclass
class TDRTrace:
    time: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        self.time = np.asarray(self.time, dtype=float)
        self.rho = np.asarray(self.rho, dtype=float)
        if self.time.shape != self.rho.shape:
            raise InvalidParameterError("time and rho must have the same length")

    @property
    def dt(self) -> float:
        return float(self.time[1] - self.time[0])


def step_reflection(z, z_ref):
    """Reflection coefficient (Z - Z_ref)/(Z + Z_ref)."""
    z = np.asarray(z, dtype=float)
    z_ref = np.asarray(z_ref, dtype=float)
    if np.any(z <= 0) or np.any(z_ref <= 0):
        raise InvalidParameterError("impedances must be positive")
    g = (z - z_ref) / (z + z_ref)
    return float(g) if g.ndim == 0 else g


def impedance_from_reflection(gamma, z_ref):
    gamma = np.asarray(gamma, dtype=float)
    if np.any(np.abs(gamma) >= 1):
        raise NonPassiveDataError("|rho| >= 1 cannot come from a passive line")
    z = z_ref * (1 + gamma) / (1 - gamma)
    return float(z) if z.ndim == 0 else z


def _layer_reflections(profile: ImpedanceProfile, dt: float, n_layers: int) -> np.ndarray:
    layers = np.rint(2 * profile.delays / dt).astype(int)
    if np.any(profile.delays / dt < MIN_SAMPLES_PER_SEGMENT):
        raise ResolutionError(
            f"dt={dt:g} s under-resolves the shortest segment ({profile.delays.min():g} s); "
            f"need at least {MIN_SAMPLES_PER_SEGMENT} samples per segment"
        )
    c = np.zeros(n_layers)
    z_prev = profile.reference
    pos = 0
    for seg, n in zip(profile.segments, layers):
        if pos < n_layers:
            c[pos] = (seg.impedance - z_prev) / (seg.impedance + z_prev)
        z_prev = seg.impedance
        pos += n
    return c


def _lattice_impulse(c: np.ndarray, n_samples: int) -> np.ndarray:
    """Surface reflection impulse response of a Goupillaud lattice.

    Time advances in half-samples; interface ``j`` sits at one-way delay
    ``j/2`` samples.  ``a`` holds down-going waves arriving at each interface
    from above, ``b`` up-going waves arriving from below.
    """
    n_if = len(c)
    a = np.zeros(n_if)
    b = np.zeros(n_if)
    out = np.zeros(n_samples)
    for step in range(2 * n_samples - 1):
        if step == 0:
            a[0] = 1.0
        up = c * a + (1 - c) * b
        down = (1 + c) * a - c * b
        if step % 2 == 0:
            out[step // 2] = up[0]
        a_next = np.zeros(n_if)
        a_next[1:] = down[:-1]
        b_next = np.zeros(n_if)
        b_next[:-1] = up[1:]
        a, b = a_next, b_next
    return out


def synthesize_trace(profile: ImpedanceProfile, dt: float, t_max: float) -> TDRTrace:
    """Step response rho(t) of ``profile`` including all multiple reflections.

    The line continues matched beyond the last segment.
    """
    if not (dt > 0 and t_max > 0):
        raise InvalidParameterError("dt and t_max must be positive")
    n = int(math.floor(t_max / dt + 1e-9)) + 1
    c = _layer_reflections(profile, dt, n)
    impulse = _lattice_impulse(c, n)
    return TDRTrace(dt * np.arange(n), np.cumsum(impulse))


def peel_layers(trace: TDRTrace, z_ref: float = 50.0) -> np.ndarray:
    """Layer-peeling inversion: impedance of every thin layer (two-way time dt).

    Passivity is judged on the de-embedded layer reflections, not on rho
    itself: the step response of a passive staircase can overshoot |rho| = 1
    while every layer reflection stays inside the unit interval.
    """
    rho = trace.rho
    if not np.all(np.isfinite(rho)):
        raise NonPassiveDataError("trace contains non-finite samples")
    impulse = np.diff(rho, prepend=0.0)
    down = np.zeros_like(impulse)
    down[0] = 1.0
    up = impulse.copy()
    z = np.empty_like(rho)
    z_cur = z_ref
    for j in range(len(rho)):
        c = up[0] / down[0]
        if abs(c) >= 1:
            raise NonPassiveDataError(
                f"layer reflection {c:.4g} at t={trace.time[j]:.6g} s; data is not from a passive line"
            )
        z_cur = z_cur * (1 + c) / (1 - c)
        z[j] = z_cur
        up_below = (up - c * down) / (1 - c)
        down_below = (1 + c) * down - c * up_below
        down = down_below[:-1]
        up = up_below[1:]
    return z


def naive_impedance(trace: TDRTrace, z_ref: float = 50.0) -> np.ndarray:
    """First-order estimate Z = Z_ref (1+rho)/(1-rho), no de-embedding."""
    return impedance_from_reflection(trace.rho, z_ref)


def _change_points(level: np.ndarray, threshold: float, min_samples: int) -> list[int]:
    starts = [0]
    current = level[0]
    j = 1
    n = len(level)
    while j < n:
        window = level[j:j + min_samples]
        if len(window) == min_samples and np.all(np.abs(window - current) > threshold):
            starts.append(j)
            current = np.median(window)
            j += min_samples
            continue
        j += 1
    return starts


def extract_impedance(trace: TDRTrace, z_ref: float = 50.0, threshold: float = STEP_THRESHOLD,
                      min_samples: int = STEP_MIN_SAMPLES) -> ImpedanceProfile:
    """Segment the layer-peeled impedance into plateaus.

    A new segment starts where the de-embedded reflection level moves by more
    than ``threshold`` for at least ``min_samples`` consecutive samples.
    Segment impedance is the median over its layers; the last segment runs to
    the end of the record.
    """
    if len(trace.rho) < 2:
        raise InvalidParameterError("trace needs at least two samples")
    z = peel_layers(trace, z_ref)
    level = (z - z_ref) / (z + z_ref)
    starts = _change_points(level, threshold, min_samples)
    bounds = starts + [len(z)]
    half = trace.dt / 2
    segments = []
    for s0, s1 in zip(bounds[:-1], bounds[1:]):
        zs = float(np.median(z[s0:s1]))
        if segments and abs(step_reflection(zs, segments[-1].impedance)) <= threshold / 2:
            prev = segments.pop()
            n_prev = round(prev.delay / half)
            zs = float(np.median(z[s0 - n_prev:s1]))
            segments.append(Segment(zs, (n_prev + s1 - s0) * half))
            continue
        segments.append(Segment(zs, (s1 - s0) * half))
    return ImpedanceProfile(tuple(segments), z_ref)


def extract_batch(traces: Sequence[TDRTrace], z_ref: float = 50.0, **kwargs) -> list[ImpedanceProfile]:
    return [extract_impedance(t, z_ref, **kwargs) for t in traces]
