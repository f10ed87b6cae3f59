from pathlib import Path

import pytest

from kitamp.gain import PumpConfig, default_dispersion_grid
from kitamp.kinetics import FilmProperties
from kitamp.line import CellGeometry, SupercellSpec, calibrate_permittivity, floquet_dispersion

ROOT = Path(__file__).resolve().parents[1]
PRESET = ROOT / "configs" / "paper_device.cfg"

DESIGN_PUMP = PumpConfig(frequency=12.666e9, current_mA=0.15, idc_mA=0.13)


def device_cells(permittivity, unloaded_um=18.0, loaded_um=6.5):
    base = CellGeometry(width=1e-6, spacing=1e-6, dielectric_thickness=100e-9,
                        permittivity=permittivity, finger_length=unloaded_um * 1e-6)
    return base, base.with_finger_length(loaded_um * 1e-6)


@pytest.fixture(scope="session")
def design_film():
    return FilmProperties(35.0, 2.1, 0.38, 10.0, 1.0)


@pytest.fixture(scope="session")
def measured_film():
    return FilmProperties(30.0, 2.1, 0.38, 10.0, 1.0)


@pytest.fixture(scope="session")
def design_permittivity(design_film):
    probe, _ = device_cells(1.0)
    return calibrate_permittivity(probe, design_film, 50.0)


@pytest.fixture(scope="session")
def design_spec(design_permittivity):
    unloaded, loaded = device_cells(design_permittivity)
    return SupercellSpec(unloaded, loaded)


@pytest.fixture(scope="session")
def design_dispersion(design_spec, design_film):
    return floquet_dispersion(design_spec, design_film, DESIGN_PUMP.idc_mA,
                              default_dispersion_grid(DESIGN_PUMP.frequency))


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
