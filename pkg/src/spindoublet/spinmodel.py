"""Six-level ladder of an S = 5/2 ion in a uniaxial crystal field.

The ladder is parameterized directly by its two zero-field intervals
rather than by crystal-field coefficients: level energies are

    E(m)/h = zeta(|m|) + g * (beta_e/h) * m * B

with zeta(1/2) = 0, zeta(3/2) the lower interval and zeta(5/2) the sum of
both intervals. Transitions are labelled by their spin-projection change;
a photon of left circular polarization drives delta_m = +1 and one of
right circular polarization drives delta_m = -1, which is what splits the
ion population into two independently addressable sub-ensembles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import BOHR_MAGNETON_GHZ_PER_T
from .errors import ValidationError

# Spin projections of the S = 5/2 ladder, low to high.
ALLOWED_M = (-2.5, -1.5, -0.5, 0.5, 1.5, 2.5)

# Polarization that can drive a transition, keyed by delta_m.
_POLARIZATION = {1: "L", -1: "R"}


@dataclass(frozen=True)
class SpinSystemParams:
    """Static parameters of the ion ladder.

    Attributes
    ----------
    zfs_12_32_ghz : float
        Zero-field interval between the |±1/2> and |±3/2> doublets, GHz.
    zfs_32_52_ghz : float
        Zero-field interval between the |±3/2> and |±5/2> doublets, GHz.
    g_factor : float
        Electron g-factor of the ladder (dimensionless).
    total_ions : float
        Number of participating ions. Any positive normalization works;
        populations scale linearly with it.
    """

    zfs_12_32_ghz: float
    zfs_32_52_ghz: float
    g_factor: float
    total_ions: float = 1.0

    def __post_init__(self):
        for name in ("zfs_12_32_ghz", "zfs_32_52_ghz"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValidationError(f"{name} must be finite and >= 0, got {value}")
        if not (math.isfinite(self.g_factor) and 0.0 < self.g_factor < 10.0):
            raise ValidationError(
                f"g_factor must be finite and in (0, 10), got {self.g_factor}"
            )
        if not (math.isfinite(self.total_ions) and self.total_ions > 0.0):
            raise ValidationError(
                f"total_ions must be finite and > 0, got {self.total_ions}"
            )


@dataclass(frozen=True)
class Transition:
    """One level pair, evaluated at a fixed field."""

    m_from: float
    m_to: float
    delta_m: int
    frequency_ghz: float
    polarization: str


@dataclass(frozen=True)
class TransitionCurve:
    """One level pair traced over a field grid."""

    label: str
    m_from: float
    m_to: float
    delta_m: int
    polarization: str
    sense: str
    field_mt: np.ndarray = field(repr=False)
    frequency_ghz: np.ndarray = field(repr=False)


def _check_m(m: float) -> float:
    m = float(m)
    if m not in ALLOWED_M:
        raise ValidationError(
            f"spin projection must be one of {ALLOWED_M}, got {m}"
        )
    return m


def _check_field(b_mt: float) -> float:
    b_mt = float(b_mt)
    if not math.isfinite(b_mt):
        raise ValidationError(f"field must be finite, got {b_mt}")
    return b_mt


def _zeta(params: SpinSystemParams, m_abs: float) -> float:
    if m_abs == 0.5:
        return 0.0
    if m_abs == 1.5:
        return params.zfs_12_32_ghz
    return params.zfs_12_32_ghz + params.zfs_32_52_ghz


def level_energy(params: SpinSystemParams, m: float, b_mt: float) -> float:
    """Energy of level ``m`` at field ``b_mt``, as E/h in GHz.

    Parameters
    ----------
    params : SpinSystemParams
        Ladder parameters.
    m : float
        Spin projection, one of ``ALLOWED_M``.
    b_mt : float
        Magnetic field along the anisotropy axis, mT. May be negative.

    Returns
    -------
    float
        Level energy divided by the Planck constant, GHz.
    """
    m = _check_m(m)
    b_mt = _check_field(b_mt)
    zeeman = params.g_factor * BOHR_MAGNETON_GHZ_PER_T * m * (b_mt * 1e-3)
    return _zeta(params, abs(m)) + zeeman


def transition(
    params: SpinSystemParams, m_from: float, m_to: float, b_mt: float
) -> Transition:
    """Transition between two ladder levels at a fixed field.

    The frequency is the magnitude of the level-energy difference. The
    polarization tag is "L" for delta_m = +1, "R" for delta_m = -1 and
    "none" for every other level pair, encoding which circular photon
    polarization can drive the transition.
    """
    m_from = _check_m(m_from)
    m_to = _check_m(m_to)
    if m_from == m_to:
        raise ValidationError("transition requires two distinct levels")
    delta_m = int(round(m_to - m_from))
    freq = abs(level_energy(params, m_to, b_mt) - level_energy(params, m_from, b_mt))
    return Transition(
        m_from=m_from,
        m_to=m_to,
        delta_m=delta_m,
        frequency_ghz=freq,
        polarization=_POLARIZATION.get(delta_m, "none"),
    )


def spectroscopy_map(
    params: SpinSystemParams, b_grid_mt, max_abs_delta_m: int = 1
) -> list[TransitionCurve]:
    """Transition frequencies of every allowed level pair over a field grid.

    Parameters
    ----------
    params : SpinSystemParams
        Ladder parameters.
    b_grid_mt : array_like
        Field grid, mT. Must be non-empty and finite; it is used as given.
    max_abs_delta_m : int
        Largest |delta_m| to include. 1 keeps only the circularly driven
        pairs; 5 includes every ordered pair.

    Returns
    -------
    list of TransitionCurve
        One curve per ordered pair (m_from, m_to) with m_from != m_to and
        |delta_m| <= max_abs_delta_m, tagged "spin-increasing" for
        delta_m > 0 and "spin-decreasing" for delta_m < 0.
    """
    grid = np.asarray(b_grid_mt, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or not np.all(np.isfinite(grid)):
        raise ValidationError("field grid must be a non-empty finite 1-d array")
    if not 1 <= int(max_abs_delta_m) <= 5:
        raise ValidationError(
            f"max_abs_delta_m must be in [1, 5], got {max_abs_delta_m}"
        )
    curves = []
    for m_from in ALLOWED_M:
        for m_to in ALLOWED_M:
            if m_to == m_from:
                continue
            delta_m = int(round(m_to - m_from))
            if abs(delta_m) > max_abs_delta_m:
                continue
            freqs = np.array(
                [transition(params, m_from, m_to, b).frequency_ghz for b in grid]
            )
            curves.append(
                TransitionCurve(
                    label=f"{_half_label(m_from)}->{_half_label(m_to)}",
                    m_from=m_from,
                    m_to=m_to,
                    delta_m=delta_m,
                    polarization=_POLARIZATION.get(delta_m, "none"),
                    sense="spin-increasing" if delta_m > 0 else "spin-decreasing",
                    field_mt=grid.copy(),
                    frequency_ghz=freqs,
                )
            )
    return curves


def _half_label(m: float) -> str:
    numerator = int(round(2 * m))
    return f"{'+' if numerator > 0 else '-'}{abs(numerator)}/2"
