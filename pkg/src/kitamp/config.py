"""Run configuration: INI-style ``.cfg`` files validated against a strict schema.

Nested sections use dotted names (``[noise.pos1]``).  Unknown sections or
keys are rejected before any computation.
"""

from __future__ import annotations

import configparser
from pathlib import Path
from typing import Annotated, Literal, Optional

from pydantic import BaseModel, BeforeValidator, ConfigDict, ValidationError, model_validator

from .errors import ConfigError
from .kinetics import FilmProperties
from .line import CellGeometry, SupercellSpec, calibrate_permittivity, frequency_grid
from .noise import NoiseChain, ThermalStage
from .tdr import ImpedanceProfile, Segment


def _split_floats(value):
    if isinstance(value, str):
        return [float(v) for v in value.replace(";", ",").split(",") if v.strip()]
    return value


def _parse_grid(value):
    if isinstance(value, str):
        parts = value.split(":")
        if len(parts) != 3:
            raise ValueError("grid must be 'f_lo:f_hi:step'")
        return tuple(float(p) for p in parts)
    return value


FloatList = Annotated[list[float], BeforeValidator(_split_floats)]
Grid = Annotated[tuple[float, float, float], BeforeValidator(_parse_grid)]


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class FilmSection(Section):
    sheet_inductance_ph: float
    scaling_current_ma: float
    critical_current_ma: float
    thickness_nm: float
    width_um: float = 1.0

    def build(self) -> FilmProperties:
        return FilmProperties(self.sheet_inductance_ph, self.scaling_current_ma,
                              self.critical_current_ma, self.thickness_nm, self.width_um)


class GeometrySection(Section):
    width_um: float
    spacing_um: float
    dielectric_thickness_nm: float
    permittivity: Optional[float] = None
    calibrate_permittivity_ohm: Optional[float] = None
    unloaded_finger_length_um: float
    loaded_finger_length_um: float
    fingers_per_cell: int = 2
    finger_width_um: Optional[float] = None
    fringing_factor: float = 1.0
    n_unloaded: int = 30
    n_loaded: int = 6
    n_supercells: int = 1200
    stub_model: Literal["distributed", "lumped"] = "distributed"

    @model_validator(mode="after")
    def _one_permittivity_source(self):
        if (self.permittivity is None) == (self.calibrate_permittivity_ohm is None):
            raise ValueError("set exactly one of 'permittivity' or 'calibrate_permittivity_ohm'")
        return self

    def cell(self, finger_length_um: float, permittivity: float) -> CellGeometry:
        return CellGeometry(
            width=self.width_um * 1e-6,
            spacing=self.spacing_um * 1e-6,
            dielectric_thickness=self.dielectric_thickness_nm * 1e-9,
            permittivity=permittivity,
            finger_length=finger_length_um * 1e-6,
            fingers_per_cell=self.fingers_per_cell,
            finger_width=None if self.finger_width_um is None else self.finger_width_um * 1e-6,
            fringing=self.fringing_factor,
        )

    def resolve_permittivity(self, film: FilmProperties) -> float:
        if self.permittivity is not None:
            return self.permittivity
        probe = self.cell(self.unloaded_finger_length_um, 1.0)
        return calibrate_permittivity(probe, film, self.calibrate_permittivity_ohm)

    def build(self, film: FilmProperties) -> SupercellSpec:
        er = self.resolve_permittivity(film)
        return SupercellSpec(
            unloaded=self.cell(self.unloaded_finger_length_um, er),
            loaded=self.cell(self.loaded_finger_length_um, er),
            n_unloaded=self.n_unloaded,
            n_loaded=self.n_loaded,
            n_supercells=self.n_supercells,
            stub_model=self.stub_model,
        )


class DesignSection(Section):
    target_z0_ohm: FloatList = [50.0, 80.0]
    finger_min_um: float = 0.0
    finger_max_um: float = 100.0
    resolution_nm: float = 1.0


class PumpSection(Section):
    frequency_hz: float
    current_ma: float = 0.0
    idc_ma: float = 0.0


class SweepSection(Section):
    dispersion_grid: Grid = (0.1e9, 16e9, 2e6)
    gain_grid: Grid = (3e9, 9.5e9, 10e6)
    steps_per_supercell: int = 1
    signal_amplitude_ma: float = 1e-6
    touchstone: bool = False
    undepleted: bool = False


class SwitchPositionSection(Section):
    """Either an effective temperature at the amplifier input or a full chain."""

    temperature_k: Optional[float] = None
    source_temperature_k: float = 293.0
    stage_temperatures_k: Optional[FloatList] = None
    attenuations_db: Optional[FloatList] = None
    extra_losses_db: Optional[FloatList] = None

    @model_validator(mode="after")
    def _one_source(self):
        chain = self.stage_temperatures_k is not None or self.attenuations_db is not None
        if (self.temperature_k is not None) == chain:
            raise ValueError("set either 'temperature_k' or 'stage_temperatures_k' + 'attenuations_db'")
        if chain:
            if self.stage_temperatures_k is None or self.attenuations_db is None:
                raise ValueError("'stage_temperatures_k' and 'attenuations_db' go together")
            n = len(self.stage_temperatures_k)
            if len(self.attenuations_db) != n or (self.extra_losses_db is not None and len(self.extra_losses_db) != n):
                raise ValueError("chain lists must have equal length")
        return self

    def chain(self) -> NoiseChain | None:
        if self.temperature_k is not None:
            return None
        extra = self.extra_losses_db or [0.0] * len(self.stage_temperatures_k)
        return NoiseChain(
            tuple(ThermalStage(t, a, f"stage{i + 1}", x)
                  for i, (t, a, x) in enumerate(zip(self.stage_temperatures_k, self.attenuations_db, extra))),
            self.source_temperature_k,
        )


class NoiseSimulateSection(Section):
    chain_gain_db: float = 60.0
    nsigma_quanta: float = 2.5
    relative_noise: float = 0.0
    grid: Grid = (5.6e9, 7.1e9, 50e6)


class NoiseSection(Section):
    pump_frequency_hz: Optional[float] = None
    pos1: SwitchPositionSection
    pos2: SwitchPositionSection
    pos3: SwitchPositionSection
    simulate: Optional[NoiseSimulateSection] = None


class TdrSection(Section):
    reference_ohm: float = 50.0
    dt_s: float = 1e-12
    t_max_s: Optional[float] = None
    threshold: float = 0.005
    min_samples: int = 3
    impedances_ohm: Optional[FloatList] = None
    delays_s: Optional[FloatList] = None

    @model_validator(mode="after")
    def _profile_lists(self):
        if (self.impedances_ohm is None) != (self.delays_s is None):
            raise ValueError("'impedances_ohm' and 'delays_s' go together")
        if self.impedances_ohm is not None and len(self.impedances_ohm) != len(self.delays_s):
            raise ValueError("'impedances_ohm' and 'delays_s' must have equal length")
        return self

    def profile(self) -> ImpedanceProfile | None:
        if self.impedances_ohm is None:
            return None
        return ImpedanceProfile(tuple(Segment(z, d) for z, d in zip(self.impedances_ohm, self.delays_s)),
                                self.reference_ohm)


class OutputSection(Section):
    directory: str = "out"


class RunConfig(Section):
    film: Optional[FilmSection] = None
    geometry: Optional[GeometrySection] = None
    design: DesignSection = DesignSection()
    pump: Optional[PumpSection] = None
    sweep: SweepSection = SweepSection()
    noise: Optional[NoiseSection] = None
    tdr: Optional[TdrSection] = None
    output: OutputSection = OutputSection()

    def require(self, *sections: str) -> None:
        missing = [s for s in sections if getattr(self, s) is None]
        if missing:
            raise ConfigError(f"missing required section(s): {', '.join('[' + m + ']' for m in missing)}")

    def echo(self) -> dict:
        return self.model_dump(mode="json", exclude_none=True)


def _nest(parser: configparser.ConfigParser) -> dict:
    tree: dict = {}
    for name in parser.sections():
        node = tree
        parts = name.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"section [{name}] collides with key {part!r}")
        leaf = node.setdefault(parts[-1], {})
        for key, value in parser.items(name):
            if key in leaf:
                raise ConfigError(f"duplicate key {name}.{key}")
            leaf[key] = value
    return tree


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if parser.defaults():
        raise ConfigError(f"{source}: [DEFAULT] section is not supported")
    try:
        return RunConfig.model_validate(_nest(parser))
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "<root>"
        raise ConfigError(f"{source}: {where}: {first['msg']}") from None


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def grid_from(spec: tuple[float, float, float]):
    return frequency_grid(*spec)
