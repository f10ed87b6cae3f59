"""Command-line front end: ``kitamp {design,dispersion,gain,noise,tdr}``.

Exit codes: 0 success, 2 configuration error, 3 physics-domain error,
4 I/O or data-file error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import fileio
from .config import RunConfig, grid_from, load_config
from .errors import (
    ConfigError,
    DataError,
    InvalidParameterError,
    PhysicsDomainError,
    ResolutionError,
    SolverError,
)
from .gain import PumpConfig, default_dispersion_grid, gain_profile, pump_power_dbm
from .line import (
    cell_section,
    characteristic_impedance,
    floquet_dispersion,
    nearest_stopband,
    solve_finger_length,
)
from .noise import SwitchPositionData, chain_input_noise, forward_model, occupancy, temperature_from_quanta, yfactor_fit
from .tdr import extract_impedance, synthesize_trace

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_IO = 0, 2, 3, 4
MANIFEST_NAME = "manifest.json"


class Run:
    """Collects emitted artifacts and input digests for the manifest."""

    def __init__(self, command: str, config: RunConfig, config_path: Path, out_dir: Path, args):
        self.command = command
        self.config = config
        self.out_dir = out_dir
        self.artifacts: list[str] = []
        self.inputs = {str(config_path): fileio.file_digest(config_path)}
        self.derived: dict = {}
        self.options = {"grid": args.grid, "seed": args.seed}

    def path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.out_dir / name

    def add_input(self, path) -> Path:
        path = Path(path)
        self.inputs[str(path)] = fileio.file_digest(path)
        return path

    def manifest(self) -> dict:
        return {
            "toolkit": "kitamp",
            "version": __version__,
            "command": self.command,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "options": self.options,
            "config": self.config.echo(),
            "derived": self.derived,
            "inputs": self.inputs,
            "artifacts": sorted(self.artifacts),
        }


def _grid_override(args, default):
    if args.grid is None:
        return grid_from(default)
    parts = args.grid.split(":")
    if len(parts) != 3:
        raise ConfigError("--grid must be 'f_lo:f_hi:step'")
    try:
        return grid_from(tuple(float(p) for p in parts))
    except ValueError as exc:
        raise ConfigError(f"--grid: {exc}") from None


def cmd_design(run: Run, args) -> None:
    cfg = run.config
    cfg.require("film", "geometry")
    film = cfg.film.build()
    spec = cfg.geometry.build(film)
    run.derived["permittivity"] = spec.unloaded.permittivity

    rows = []
    for name, cell in (("unloaded", spec.unloaded), ("loaded", spec.loaded)):
        sec = cell_section(cell, film)
        z0 = characteristic_impedance(sec)
        rows.append((name, cell.finger_length * 1e6, sec.inductance, sec.capacitance, z0))
        print(f"{name:9s} finger {cell.finger_length * 1e6:7.3f} um  Z0 = {z0:.3f} ohm")
    fileio.write_csv(run.path("design_cells.csv"),
                     ("cell", "finger_length_um", "inductance_h_per_m", "capacitance_f_per_m", "z0_ohm"), rows)

    d = cfg.design
    solutions = []
    for target in d.target_z0_ohm:
        length = solve_finger_length(spec.unloaded, film, target,
                                     bounds=(d.finger_min_um * 1e-6, d.finger_max_um * 1e-6),
                                     resolution=d.resolution_nm * 1e-9)
        solutions.append((target, length * 1e6))
        print(f"target {target:g} ohm -> finger length {length * 1e6:.3f} um")
    fileio.write_csv(run.path("design_fingers.csv"), ("target_z0_ohm", "finger_length_um"), solutions)


def cmd_dispersion(run: Run, args) -> None:
    cfg = run.config
    cfg.require("film", "geometry")
    film = cfg.film.build()
    spec = cfg.geometry.build(film)
    idc = cfg.pump.idc_ma if cfg.pump is not None else 0.0
    grid = _grid_override(args, cfg.sweep.dispersion_grid)
    disp = floquet_dispersion(spec, film, idc, grid)
    bands = disp.stopbands
    fileio.write_dispersion(run.path("dispersion.csv"), disp)
    fileio.write_stopbands(run.path("stopbands.csv"), bands)
    labelled = nearest_stopband(bands)
    for b in bands:
        tag = "  <- nearest 10.75 GHz" if b is labelled else ""
        print(f"stop band {b.f_low / 1e9:.6f} - {b.f_high / 1e9:.6f} GHz{tag}")
    if not bands:
        print("no stop bands on the grid")
    run.derived["stopbands_hz"] = [[b.f_low, b.f_high] for b in bands]


def cmd_gain(run: Run, args) -> None:
    cfg = run.config
    cfg.require("film", "geometry", "pump")
    film = cfg.film.build()
    spec = cfg.geometry.build(film)
    p = cfg.pump
    pump = PumpConfig(p.frequency_hz, p.current_ma, p.idc_ma)
    grid = _grid_override(args, cfg.sweep.gain_grid)
    disp = floquet_dispersion(spec, film, pump.idc_mA, default_dispersion_grid(pump.frequency))
    sw = cfg.sweep
    profile = gain_profile(spec, film, pump, grid, dispersion=disp,
                           steps_per_supercell=sw.steps_per_supercell,
                           signal_mA=sw.signal_amplitude_ma, undepleted=sw.undepleted)
    fileio.write_gain(run.path("gain.csv"), profile)
    if sw.touchstone:
        fileio.write_touchstone(run.path("gain.s2p"), profile)
    z0 = characteristic_impedance(cell_section(spec.unloaded, film, pump.idc_mA))
    run.derived.update({
        "pump_power_dbm": pump_power_dbm(pump.current_mA, z0),
        "peak_gain_db": profile.peak_gain_db,
        "peak_frequency_hz": profile.peak_frequency,
    })
    lo, hi = profile.bandwidth_3db()
    print(f"pump {pump.frequency / 1e9:.4f} GHz, {pump.current_mA:g} mA ({pump_power_dbm(pump.current_mA, z0):.2f} dBm)")
    print(f"peak gain {profile.peak_gain_db:.3f} dB at {profile.peak_frequency / 1e9:.4f} GHz; "
          f"3 dB band {lo / 1e9:.4f} - {hi / 1e9:.4f} GHz")


def _noise_inputs(cfg: RunConfig, f, f_pump):
    """Signal and idler input quanta per switch position, shape (n_freq, 3)."""
    f_i = f_pump - f
    ns, ni = [], []
    for pos in (cfg.noise.pos1, cfg.noise.pos2, cfg.noise.pos3):
        chain = pos.chain()
        if chain is None:
            ns.append(occupancy(f, pos.temperature_k))
            ni.append(occupancy(f_i, pos.temperature_k))
        else:
            ns.append(chain_input_noise(chain, f))
            ni.append(chain_input_noise(chain, f_i))
    return np.column_stack(ns), np.column_stack(ni)


def cmd_noise(run: Run, args) -> None:
    cfg = run.config
    cfg.require("noise")
    f_pump = cfg.noise.pump_frequency_hz or (cfg.pump.frequency_hz if cfg.pump else None)
    if f_pump is None:
        raise ConfigError("noise fit needs noise.pump_frequency_hz or [pump] frequency_hz for the idler")

    if args.scan is not None:
        freqs, powers = fileio.read_scan(run.add_input(args.scan))
    elif args.simulate:
        sim = cfg.noise.simulate
        if sim is None:
            raise ConfigError("--simulate needs a [noise.simulate] section")
        freqs = _grid_override(args, sim.grid)
        ns, ni = _noise_inputs(cfg, freqs, f_pump)
        clean = forward_model(ns, ni, 10 ** (sim.chain_gain_db / 10), sim.nsigma_quanta)
        rng = np.random.default_rng(args.seed)
        powers = clean + sim.relative_noise * clean * rng.standard_normal(clean.shape)
        scan = fileio.write_scan(run.path("noise_scan_simulated.csv"), freqs, powers)
        # fit exactly what was written, so a later --scan refit reproduces it
        freqs, powers = fileio.read_scan(scan)
    else:
        raise ConfigError("noise needs --scan <csv> or --simulate")

    if np.any(freqs >= f_pump) or np.any(freqs <= 0):
        raise InvalidParameterError("scan frequencies must lie in (0, f_pump)")
    ns, ni = _noise_inputs(cfg, freqs, f_pump)
    rows = []
    for k, f in enumerate(freqs):
        pts = [SwitchPositionData(ns[k, j], ni[k, j], powers[k, j]) for j in range(3)]
        fit = yfactor_fit(pts)
        n_sig = fit.system_added_noise
        kelvin = temperature_from_quanta(n_sig, f) if n_sig > 0.5 else float("nan")
        rows.append((f, fit.chain_gain_db, n_sig, kelvin))
    fileio.write_csv(run.path("noise_fit.csv"), fileio.FIT_HEADER, rows)
    nsig = np.array([r[2] for r in rows])
    print(f"fitted {len(rows)} frequencies; N_sigma range {nsig.min():.3f} - {nsig.max():.3f} quanta")


def cmd_tdr(run: Run, args) -> None:
    cfg = run.config
    tdr = cfg.tdr
    if tdr is None:
        from .config import TdrSection
        tdr = TdrSection()
    if args.trace is not None:
        trace = fileio.read_trace(run.add_input(args.trace))
        prof = extract_impedance(trace, tdr.reference_ohm, tdr.threshold, tdr.min_samples)
        fileio.write_profile(run.path("tdr_profile.csv"), prof)
        for i, s in enumerate(prof.segments):
            print(f"segment {i}: {s.impedance:.3f} ohm, {s.delay:.6g} s")
        return
    if args.profile is not None:
        prof = fileio.read_profile(run.add_input(args.profile), tdr.reference_ohm)
    else:
        prof = tdr.profile()
        if prof is None:
            raise ConfigError("tdr needs --trace, --profile, or tdr.impedances_ohm/delays_s in the config")
    t_max = tdr.t_max_s if tdr.t_max_s is not None else 2.5 * float(prof.delays.sum())
    trace = synthesize_trace(prof, tdr.dt_s, t_max)
    fileio.write_trace(run.path("tdr_trace.csv"), trace)
    print(f"synthesized {len(trace.rho)} samples, final rho {trace.rho[-1]:.6f}")


COMMANDS = {
    "design": cmd_design,
    "dispersion": cmd_dispersion,
    "gain": cmd_gain,
    "noise": cmd_noise,
    "tdr": cmd_tdr,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kitamp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kitamp {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration (.cfg)")
    common.add_argument("--out", help="output directory (overrides [output] directory)")
    common.add_argument("--grid", help="frequency grid f_lo:f_hi:step in Hz (overrides config)")
    common.add_argument("--seed", type=int, default=0, help="RNG seed for simulated noise scans")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("design", parents=[common], help="cell impedances and finger-length solver")
    sub.add_parser("dispersion", parents=[common], help="Bloch dispersion and stop bands")
    sub.add_parser("gain", parents=[common], help="three-wave-mixing gain profile")
    p = sub.add_parser("noise", parents=[common], help="y-factor fit of system-added noise")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scan", help="noise scan CSV")
    src.add_argument("--simulate", action="store_true", help="forward-model a scan from [noise.simulate]")
    p = sub.add_parser("tdr", parents=[common], help="TDR synthesis or impedance extraction")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--trace", help="trace CSV to invert")
    src.add_argument("--profile", help="profile CSV to synthesize")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("scan", "simulate", "trace", "profile"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        config_path = Path(args.config)
        config = load_config(config_path)
        out_dir = Path(args.out or config.output.directory)
        out_dir.mkdir(parents=True, exist_ok=True)
        run = Run(args.command, config, config_path, out_dir, args)
        COMMANDS[args.command](run, args)
        (out_dir / MANIFEST_NAME).write_text(json.dumps(run.manifest(), indent=2, sort_keys=True) + "\n")
    except (ConfigError, InvalidParameterError, ResolutionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PhysicsDomainError, SolverError) as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except (OSError, DataError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
