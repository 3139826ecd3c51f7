"""Command line front end.

Subcommands compute one report each and write it twice: a delimited data
file (CSV by default, JSON as an alternative container for the same
fields) and a rendered PNG figure alongside it. All outputs are written
atomically (temp file, then rename), so an interrupted run never leaves
a truncated file under a declared name.

Exit codes: 0 on success, 2 for anything that amounts to invalid input
(config problems, bad overrides, malformed data files), 1 when a solver
fails numerically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import plots
from .cavityqed import EnsembleCoupling, ModeDoublet
from .config import (
    RunConfig,
    load_config,
    per_spin_reference,
    resolved_couplings,
)
from .errors import NumericalError, ValidationError
from .fitting import DEFAULT_FREE, PARAM_NAMES, Observation, fit_coupled_modes
from .spectra import field_sweep, field_sweep_fixed, transmission
from .spinmodel import ALLOWED_M, SpinSystemParams, level_energy, spectroscopy_map, transition
from .thermo import populations, susceptibility_thermal


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _round12(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return float(format(value, ".12g"))
    if isinstance(value, dict):
        return {key: _round12(v) for key, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round12(v) for v in value]
    return value


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_rows(out_dir: Path, stem: str, fmt: str, header, rows) -> Path:
    if fmt == "csv":
        lines = [",".join(header)]
        lines.extend(",".join(_fmt(v) for v in row) for row in rows)
        path = out_dir / f"{stem}.csv"
        _atomic_write(path, "\n".join(lines) + "\n")
    else:
        payload = [dict(zip(header, row)) for row in rows]
        path = out_dir / f"{stem}.json"
        _atomic_write(path, json.dumps(_round12(payload), indent=2) + "\n")
    return path


def _half_label(m: float) -> str:
    numerator = int(round(2 * m))
    return f"{'+' if numerator > 0 else '-'}{abs(numerator)}/2"


def _cmd_levels(args, config: RunConfig, out_dir: Path, fmt: str):
    grid = config.grids.spectroscopy_field_mt
    energies = {
        m: np.array([level_energy(config.spin, m, b) for b in grid])
        for m in ALLOWED_M
    }
    header = ["B_mT"] + [f"E_{_half_label(m)}_GHz" for m in ALLOWED_M]
    rows = [
        [grid[i]] + [float(energies[m][i]) for m in ALLOWED_M]
        for i in range(grid.size)
    ]
    data = _write_rows(out_dir, "levels", fmt, header, rows)
    figure = out_dir / "levels.png"
    plots.render_levels(grid, energies, figure)
    print(f"wrote {data} and {figure}")


def _cmd_transitions(args, config: RunConfig, out_dir: Path, fmt: str):
    curves = spectroscopy_map(config.spin, config.grids.spectroscopy_field_mt)
    header = ["label", "m_from", "m_to", "delta_m", "polarization", "B_mT", "f_GHz"]
    rows = []
    for curve in curves:
        for b, f in zip(curve.field_mt, curve.frequency_ghz):
            rows.append(
                [
                    curve.label,
                    curve.m_from,
                    curve.m_to,
                    curve.delta_m,
                    curve.polarization,
                    float(b),
                    float(f),
                ]
            )
    data = _write_rows(out_dir, "transitions", fmt, header, rows)
    figure = out_dir / "transitions.png"
    plots.render_transitions(curves, figure)
    print(f"wrote {data} and {figure}")


def _run_config_sweep(config: RunConfig):
    grid = config.grids.field_mt
    which = config.coupling.which
    if config.coupling.thermal and which != "none":
        return field_sweep(
            config.spin,
            config.doublet,
            per_spin_reference(config),
            which,
            grid,
            config.grids.sweep_temperature_k,
        )
    g_plus, g_minus = resolved_couplings(config, 0.0, config.grids.sweep_temperature_k)
    return field_sweep_fixed(
        config.spin, config.doublet, g_plus, g_minus, which, grid
    )


def _sweep_rows(sweep):
    labels = sweep.labels
    n_branch = len(sweep.rows[0].branches)
    header = ["B_mT"]
    header += [f"branch{j + 1}_GHz" for j in range(n_branch)]
    for j in range(n_branch):
        header += [f"frac_{label}{j + 1}" for label in labels]
    rows = []
    for row in sweep.rows:
        out = [row.field_mt]
        out += [b.frequency_ghz for b in row.branches]
        for b in row.branches:
            out += [b.fractions[label] for label in labels]
        rows.append(out)
    return header, rows


def _cmd_sweep(args, config: RunConfig, out_dir: Path, fmt: str):
    sweep = _run_config_sweep(config)
    header, rows = _sweep_rows(sweep)
    data = _write_rows(out_dir, "sweep", fmt, header, rows)
    figure = out_dir / "sweep.png"
    plots.render_sweep(sweep, config.doublet, figure)
    print(f"wrote {data} and {figure}")


def _cmd_s21(args, config: RunConfig, out_dir: Path, fmt: str):
    b = config.grids.s21_field_mt
    t = config.grids.sweep_temperature_k
    g_plus, g_minus = resolved_couplings(config, b, t)
    ensemble = EnsembleCoupling(
        g_plus_mhz=g_plus,
        g_minus_mhz=g_minus,
        gamma_mhz=config.coupling.gamma_mhz,
        f_plus_ghz=transition(config.spin, 0.5, 1.5, b).frequency_ghz,
        f_minus_ghz=transition(config.spin, -0.5, -1.5, b).frequency_ghz,
    )
    spectrum = transmission(
        config.doublet, ensemble, config.coupling.which, config.grids.frequency_ghz
    )
    header = ["f_GHz", "magnitude"]
    rows = [
        [float(f), float(m)]
        for f, m in zip(spectrum.frequency_ghz, spectrum.magnitude)
    ]
    data = _write_rows(out_dir, "s21", fmt, header, rows)
    figure = out_dir / "s21.png"
    plots.render_s21(spectrum, figure)
    print(f"wrote {data} and {figure}")


def _cmd_thermo(args, config: RunConfig, out_dir: Path, fmt: str):
    b = config.grids.thermo_field_mt
    header = ["T_K", "chi_plus", "chi_minus", "N_plus", "N_minus"]
    rows = []
    chi_plus = []
    chi_minus = []
    temperatures = config.grids.temperature_k
    for t in temperatures:
        chi = susceptibility_thermal(config.spin, b, t)
        state = populations(config.spin, b, t)
        chi_plus.append(chi.chi_plus)
        chi_minus.append(chi.chi_minus)
        rows.append([float(t), chi.chi_plus, chi.chi_minus, state.n_plus, state.n_minus])
    data = _write_rows(out_dir, "chi", fmt, header, rows)
    figure = out_dir / "chi.png"
    plots.render_thermo(temperatures, chi_plus, chi_minus, figure)
    print(f"wrote {data} and {figure}")


def _read_observations(path: Path):
    if not path.is_file():
        raise ValidationError(f"observation file not found: {path}")
    lines = [line.strip() for line in path.read_text().splitlines() if line.strip()]
    if len(lines) < 2:
        raise ValidationError(f"observation file {path} has no data rows")
    header = lines[0].split(",")

    def parse_float(token, lineno):
        try:
            return float(token)
        except ValueError:
            raise ValidationError(
                f"{path}:{lineno}: {token!r} is not a number"
            ) from None

    if header[0] != "B_mT":
        raise ValidationError(
            f"observation file {path} must start with a B_mT column"
        )
    if len(header) > 1 and header[1].startswith("branch"):
        peak_cols = [
            i
            for i, name in enumerate(header)
            if name.startswith("branch") and name.endswith("_GHz")
        ]
        observations = []
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) < len(header):
                raise ValidationError(f"{path}:{lineno}: short row")
            b = parse_float(parts[0], lineno)
            peaks = tuple(parse_float(parts[i], lineno) for i in peak_cols)
            observations.append(Observation(field_mt=b, peaks_ghz=peaks))
        return observations
    if header in (["B_mT", "f_GHz"], ["B_mT", "f_GHz", "weight"]):
        groups: dict = {}
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) != len(header):
                raise ValidationError(f"{path}:{lineno}: expected {len(header)} columns")
            b = parse_float(parts[0], lineno)
            f = parse_float(parts[1], lineno)
            w = parse_float(parts[2], lineno) if len(parts) == 3 else 1.0
            peaks, weights = groups.setdefault(b, ([], []))
            peaks.append(f)
            weights.append(w)
        observations = []
        for b, (peaks, weights) in groups.items():
            if len(set(weights)) != 1:
                raise ValidationError(
                    f"observation file {path}: rows at B = {b} mT disagree on weight"
                )
            observations.append(
                Observation(field_mt=b, peaks_ghz=tuple(peaks), weight=weights[0])
            )
        return observations
    raise ValidationError(
        f"observation file {path} has an unrecognized header; expected "
        "B_mT,f_GHz[,weight] or a sweep file with branch columns"
    )


def _cmd_fit(args, config: RunConfig, out_dir: Path, fmt: str):
    which = config.coupling.which
    if which == "none":
        raise ValidationError(
            "fit requires coupling.which to be plus or minus, not none"
        )
    observations = _read_observations(Path(args.data))
    initial = {
        "f_r_ghz": config.doublet.f_r_ghz,
        "f_l_ghz": config.doublet.f_l_ghz,
        "g_rl_mhz": config.doublet.g_rl_mhz,
        "g_sel_mhz": config.coupling.g_ref_mhz,
        "zfs_ghz": config.spin.zfs_12_32_ghz,
        "g_factor": config.spin.g_factor,
    }
    free = tuple(name.strip() for name in args.free.split(",") if name.strip())
    result = fit_coupled_modes(observations, initial, free=free, which=which)
    merged = dict(initial)
    merged.update(result.parameters)

    header = ["name", "value", "free"]
    rows = [[name, merged[name], name in result.parameters] for name in PARAM_NAMES]
    rows.append(["residual_rms_MHz", result.residual_rms_mhz, ""])
    rows.append(["iterations", result.iterations, ""])
    rows.append(["converged", result.converged, ""])
    if fmt == "csv":
        data = _write_rows(out_dir, "fit", fmt, header, rows)
    else:
        payload = {
            "parameters": merged,
            "free": sorted(result.parameters),
            "residual_rms_MHz": result.residual_rms_mhz,
            "iterations": result.iterations,
            "converged": result.converged,
        }
        data = out_dir / "fit.json"
        _atomic_write(data, json.dumps(_round12(payload), indent=2) + "\n")

    spin_fit = SpinSystemParams(
        zfs_12_32_ghz=merged["zfs_ghz"],
        zfs_32_52_ghz=config.spin.zfs_32_52_ghz,
        g_factor=merged["g_factor"],
        total_ions=config.spin.total_ions,
    )
    doublet_fit = ModeDoublet(
        f_r_ghz=merged["f_r_ghz"],
        f_l_ghz=merged["f_l_ghz"],
        kappa_r_mhz=config.doublet.kappa_r_mhz,
        kappa_l_mhz=config.doublet.kappa_l_mhz,
        g_rl_mhz=merged["g_rl_mhz"],
    )
    fields = [obs.field_mt for obs in observations]
    lo, hi = min(fields), max(fields)
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    model_sweep = field_sweep_fixed(
        spin_fit,
        doublet_fit,
        merged["g_sel_mhz"] if which == "plus" else 0.0,
        merged["g_sel_mhz"] if which == "minus" else 0.0,
        which,
        np.linspace(lo, hi, 201),
    )
    figure = out_dir / "fit.png"
    plots.render_fit(observations, model_sweep, figure)
    print(f"wrote {data} and {figure}")


_COMMANDS = {
    "levels": _cmd_levels,
    "transitions": _cmd_transitions,
    "sweep": _cmd_sweep,
    "s21": _cmd_s21,
    "thermo": _cmd_thermo,
    "fit": _cmd_fit,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spindoublet",
        description=(
            "Simulate and fit a circularly polarized cavity doublet coupled "
            "to polarization-selected spin sub-ensembles."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument(
            "--config",
            default=None,
            metavar="PATH",
            help="configuration file (default: the bundled reference scenario)",
        )
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config value by dotted path; repeatable",
        )
        p.add_argument(
            "--out",
            default=None,
            metavar="DIR",
            help="output directory (default: output.directory from the config)",
        )
        p.add_argument(
            "--format",
            choices=("csv", "json"),
            default=None,
            help="data container (default: output.format from the config)",
        )
        return p

    add("levels", "tabulate the six level energies over the spectroscopy grid")
    add("transitions", "tabulate transition frequencies and their polarizations")
    add("sweep", "diagonalize the coupled-mode model over the field grid")
    add("s21", "compute the transmission spectrum at the working field")
    add("thermo", "tabulate susceptibilities and sub-ensemble sizes over temperature")
    fit = add("fit", "fit coupled-mode parameters to observed peak positions")
    fit.add_argument(
        "--data",
        required=True,
        metavar="PATH",
        help="observation CSV, long form B_mT,f_GHz[,weight] or a sweep file",
    )
    fit.add_argument(
        "--free",
        default=",".join(DEFAULT_FREE),
        metavar="NAMES",
        help="comma-separated free parameters (default: %(default)s)",
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.overrides)
        out_dir = Path(args.out) if args.out is not None else Path(config.output.directory)
        fmt = args.format if args.format is not None else config.output.format
        out_dir.mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.command](args, config, out_dir, fmt)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
