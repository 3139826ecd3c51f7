"""Structured run configuration for the command line tool.

The configuration file is YAML with units spelled out in the key names,
because a codebase mixing GHz, MHz, mT and K earns every unit bug it
makes implicit. Loading is strict: unknown keys, missing keys and wrong
types are rejected with the dotted path of the offending key, and the
same dotted paths are what ``--set`` overrides address.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .cavityqed import ModeDoublet
from .errors import ValidationError
from .spinmodel import SpinSystemParams
from .thermo import susceptibility_thermal

_GRID_KEYS = {"start", "stop", "num", "spacing"}


@dataclass(frozen=True)
class CouplingConfig:
    """How the spin-photon coupling is calibrated and resolved.

    A single measured collective coupling ``g_ref_mhz`` at the reference
    field and temperature anchors everything. With ``thermal`` true the
    coupling is re-derived from the thermal polarization at the working
    point; with it false the reference value is used as-is, which is the
    right mode when feeding fits whose data were generated at fixed
    coupling.
    """

    which: str
    g_ref_mhz: float
    b_ref_mt: float
    t_ref_k: float
    gamma_mhz: float
    thermal: bool


@dataclass(frozen=True)
class GridConfig:
    """All sampling grids and scalar evaluation points."""

    field_mt: np.ndarray
    spectroscopy_field_mt: np.ndarray
    frequency_ghz: np.ndarray
    temperature_k: np.ndarray
    sweep_temperature_k: float
    thermo_field_mt: float
    s21_field_mt: float


@dataclass(frozen=True)
class OutputConfig:
    directory: str
    format: str


@dataclass(frozen=True)
class RunConfig:
    spin: SpinSystemParams
    doublet: ModeDoublet
    coupling: CouplingConfig
    grids: GridConfig
    output: OutputConfig


def default_config_path() -> Path:
    """Path of the bundled reference configuration."""
    return Path(str(resources.files("spindoublet").joinpath("reference.config")))


class _Section:
    """One mapping level of the config tree, with consumption tracking."""

    def __init__(self, mapping, path):
        if not isinstance(mapping, dict):
            raise ValidationError(f"config section {path or 'root'} must be a mapping")
        self.mapping = mapping
        self.path = path
        self.seen = set()

    def _get(self, key):
        if key not in self.mapping:
            raise ValidationError(f"missing config key {self._join(key)}")
        self.seen.add(key)
        return self.mapping[key]

    def _join(self, key):
        return f"{self.path}.{key}" if self.path else key

    def child(self, key):
        return _Section(self._get(key), self._join(key))

    def number(self, key):
        value = self._get(key)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"config key {self._join(key)} must be a number")
        value = float(value)
        if not math.isfinite(value):
            raise ValidationError(f"config key {self._join(key)} must be finite")
        return value

    def boolean(self, key):
        value = self._get(key)
        if not isinstance(value, bool):
            raise ValidationError(f"config key {self._join(key)} must be a boolean")
        return value

    def text(self, key):
        value = self._get(key)
        if not isinstance(value, str):
            raise ValidationError(f"config key {self._join(key)} must be a string")
        return value

    def finish(self, extra_allowed=()):
        unknown = set(self.mapping) - self.seen - set(extra_allowed)
        if unknown:
            worst = sorted(unknown)[0]
            raise ValidationError(f"unknown config key {self._join(worst)}")


def _grid(section: _Section, key: str) -> np.ndarray:
    sub = section.child(key)
    start = sub.number("start")
    stop = sub.number("stop")
    num = sub._get("num")
    if isinstance(num, bool) or not isinstance(num, int):
        raise ValidationError(f"config key {sub._join('num')} must be an integer")
    spacing = "linear"
    if "spacing" in sub.mapping:
        spacing = sub.text("spacing")
    sub.finish()
    if num < 2:
        raise ValidationError(f"grid {sub.path} needs num >= 2, got {num}")
    if not start < stop:
        raise ValidationError(f"grid {sub.path} must be ascending (start < stop)")
    if spacing == "linear":
        return np.linspace(start, stop, num)
    if spacing == "log":
        if start <= 0:
            raise ValidationError(f"log-spaced grid {sub.path} needs start > 0")
        return np.geomspace(start, stop, num)
    raise ValidationError(
        f"grid {sub.path} spacing must be 'linear' or 'log', got {spacing!r}"
    )


def _apply_overrides(tree: dict, overrides) -> dict:
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"override {item!r} is not of the form key=value")
        dotted, raw = item.split("=", 1)
        keys = dotted.split(".")
        node = tree
        for key in keys[:-1]:
            if not isinstance(node, dict) or key not in node:
                raise ValidationError(f"override names unknown config key {dotted}")
            node = node[key]
        leaf = keys[-1]
        if not isinstance(node, dict) or leaf not in node:
            raise ValidationError(f"override names unknown config key {dotted}")
        node[leaf] = _coerce(raw, node[leaf], dotted)
    return tree


def _coerce(raw: str, template, dotted: str):
    if isinstance(template, bool):
        lowered = raw.strip().lower()
        if lowered in ("true", "yes", "1"):
            return True
        if lowered in ("false", "no", "0"):
            return False
        raise ValidationError(f"override {dotted} expects a boolean, got {raw!r}")
    if isinstance(template, int) and not isinstance(template, bool):
        try:
            return int(raw)
        except ValueError:
            raise ValidationError(
                f"override {dotted} expects an integer, got {raw!r}"
            ) from None
    if isinstance(template, float):
        try:
            return float(raw)
        except ValueError:
            raise ValidationError(
                f"override {dotted} expects a number, got {raw!r}"
            ) from None
    if isinstance(template, str):
        return raw
    raise ValidationError(f"override {dotted} targets a section, not a value")


def load_config(path=None, overrides=()) -> RunConfig:
    """Load, override, and validate a configuration file.

    Parameters
    ----------
    path : str or Path, optional
        Configuration file; the bundled reference scenario when omitted.
    overrides : sequence of str
        Dotted-path assignments like ``coupling.gamma_MHz=30``. Each must
        name an existing key; values are coerced to the type of the value
        they replace.

    Returns
    -------
    RunConfig
        Fully validated configuration with instantiated domain objects.
    """
    config_path = Path(path) if path is not None else default_config_path()
    if not config_path.is_file():
        raise ValidationError(f"config file not found: {config_path}")
    try:
        tree = yaml.safe_load(config_path.read_text())
    except yaml.YAMLError as exc:
        raise ValidationError(f"config file does not parse: {exc}") from None
    if not isinstance(tree, dict):
        raise ValidationError("config root must be a mapping")
    tree = _apply_overrides(tree, overrides)

    root = _Section(tree, "")
    spin_sec = root.child("spin")
    spin = SpinSystemParams(
        zfs_12_32_ghz=spin_sec.number("zfs_12_32_GHz"),
        zfs_32_52_ghz=spin_sec.number("zfs_32_52_GHz"),
        g_factor=spin_sec.number("g_factor"),
        total_ions=spin_sec.number("total_ions"),
    )
    spin_sec.finish()

    doublet_sec = root.child("doublet")
    doublet = ModeDoublet(
        f_r_ghz=doublet_sec.number("f_R_GHz"),
        f_l_ghz=doublet_sec.number("f_L_GHz"),
        kappa_r_mhz=doublet_sec.number("kappa_R_MHz"),
        kappa_l_mhz=doublet_sec.number("kappa_L_MHz"),
        g_rl_mhz=doublet_sec.number("g_RL_MHz"),
    )
    doublet_sec.finish()

    coupling_sec = root.child("coupling")
    which = coupling_sec.text("which")
    if which not in ("plus", "minus", "none"):
        raise ValidationError(
            f"config key coupling.which must be plus, minus or none, got {which!r}"
        )
    coupling = CouplingConfig(
        which=which,
        g_ref_mhz=coupling_sec.number("g_ref_MHz"),
        b_ref_mt=coupling_sec.number("B_ref_mT"),
        t_ref_k=coupling_sec.number("T_ref_K"),
        gamma_mhz=coupling_sec.number("gamma_MHz"),
        thermal=coupling_sec.boolean("thermal"),
    )
    if coupling.g_ref_mhz < 0:
        raise ValidationError("config key coupling.g_ref_MHz must be >= 0")
    if coupling.gamma_mhz <= 0:
        raise ValidationError("config key coupling.gamma_MHz must be > 0")
    if coupling.t_ref_k <= 0:
        raise ValidationError("config key coupling.T_ref_K must be > 0")
    coupling_sec.finish()

    grids_sec = root.child("grids")
    grids = GridConfig(
        field_mt=_grid(grids_sec, "field_mT"),
        spectroscopy_field_mt=_grid(grids_sec, "spectroscopy_field_mT"),
        frequency_ghz=_grid(grids_sec, "frequency_GHz"),
        temperature_k=_grid(grids_sec, "temperature_K"),
        sweep_temperature_k=grids_sec.number("sweep_temperature_K"),
        thermo_field_mt=grids_sec.number("thermo_field_mT"),
        s21_field_mt=grids_sec.number("s21_field_mT"),
    )
    if grids.sweep_temperature_k <= 0:
        raise ValidationError("config key grids.sweep_temperature_K must be > 0")
    grids_sec.finish()

    output_sec = root.child("output")
    output = OutputConfig(
        directory=output_sec.text("directory"),
        format=output_sec.text("format"),
    )
    if output.format not in ("csv", "json"):
        raise ValidationError(
            f"config key output.format must be csv or json, got {output.format!r}"
        )
    output_sec.finish()

    root.finish()
    return RunConfig(
        spin=spin, doublet=doublet, coupling=coupling, grids=grids, output=output
    )


def per_spin_reference(config: RunConfig) -> float:
    """Per-spin coupling implied by the calibrated reference coupling.

    Uses the same net-polarization normalization the field sweeps apply,
    so re-thermalizing at the reference point returns exactly the
    reference coupling.
    """
    coupling = config.coupling
    if coupling.which == "none":
        return 0.0
    chi = susceptibility_thermal(
        config.spin, coupling.b_ref_mt, coupling.t_ref_k
    )
    polarized = config.spin.total_ions * (
        chi.chi_plus if coupling.which == "plus" else chi.chi_minus
    )
    if polarized <= 0:
        raise ValidationError(
            "reference sub-ensemble has no net polarization; cannot calibrate "
            "the per-spin coupling"
        )
    return coupling.g_ref_mhz / math.sqrt(polarized)


def resolved_couplings(config: RunConfig, b_mt: float, t_k: float) -> tuple:
    """Collective (g_plus, g_minus) in MHz at a working point.

    Thermal mode rescales the reference coupling with the net
    polarization at (b_mt, t_k); fixed mode returns the reference value
    for the selected transition and zero for the other.
    """
    coupling = config.coupling
    if coupling.which == "none":
        return (0.0, 0.0)
    if not coupling.thermal:
        if coupling.which == "plus":
            return (coupling.g_ref_mhz, 0.0)
        return (0.0, coupling.g_ref_mhz)
    g_single = per_spin_reference(config)
    chi = susceptibility_thermal(config.spin, b_mt, t_k)
    scale = config.spin.total_ions
    return (
        g_single * math.sqrt(scale * chi.chi_plus),
        g_single * math.sqrt(scale * chi.chi_minus),
    )
