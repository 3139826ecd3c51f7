"""Boltzmann statistics of the six-level ladder.

Everything here reduces to one partition function over the six spin
projections. Two derived quantities matter downstream: the sub-ensemble
sizes N_plus and N_minus (ions sitting in |+1/2> and |-1/2>, the lower
levels of the two circularly driven transitions), which set the collective
couplings through g = g_single * sqrt(N), and the population-difference
susceptibilities chi_plus and chi_minus, which follow a Curie-like 1/T law
at high temperature and saturate once the thermal energy drops below the
relevant level splittings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType

from .constants import BOLTZMANN_GHZ_PER_K
from .errors import ValidationError
from .spinmodel import ALLOWED_M, SpinSystemParams, level_energy


@dataclass(frozen=True)
class ThermalState:
    """Occupancies of the six ladder levels at one (B, T) point.

    Attributes
    ----------
    field_mt, temperature_k : float
        Evaluation point.
    occupancy : mapping
        Fractional occupancy per spin projection; values sum to 1.
    total_ions : float
        Normalization copied from the ladder parameters.
    """

    field_mt: float
    temperature_k: float
    occupancy: MappingProxyType
    total_ions: float

    @property
    def n_plus(self) -> float:
        """Ions in |+1/2>, the lower level of the delta_m = +1 transition."""
        return self.total_ions * self.occupancy[0.5]

    @property
    def n_minus(self) -> float:
        """Ions in |-1/2>, the lower level of the delta_m = -1 transition."""
        return self.total_ions * self.occupancy[-0.5]


@dataclass(frozen=True)
class Susceptibility:
    """Population-difference susceptibilities of the two sub-ensembles."""

    chi_plus: float
    chi_minus: float


def _check_temperature(t_k: float) -> float:
    t_k = float(t_k)
    if not (math.isfinite(t_k) and t_k > 0.0):
        raise ValidationError(f"temperature must be finite and > 0 K, got {t_k}")
    return t_k


def partition_function(params: SpinSystemParams, b_mt: float, t_k: float) -> float:
    """Canonical partition function over the six ladder levels.

    Energies are re-referenced to the instantaneous ground level before
    exponentiation, so the result is finite at any positive temperature
    and lies in (1, 6].
    """
    t_k = _check_temperature(t_k)
    energies = [level_energy(params, m, b_mt) for m in ALLOWED_M]
    e0 = min(energies)
    theta = BOLTZMANN_GHZ_PER_K * t_k
    return sum(math.exp(-(e - e0) / theta) for e in energies)


def populations(params: SpinSystemParams, b_mt: float, t_k: float) -> ThermalState:
    """Boltzmann occupancies of the six levels at one (B, T) point.

    Returns
    -------
    ThermalState
        Occupancies keyed by spin projection, summing to 1, together with
        the sub-ensemble sizes through ``n_plus`` and ``n_minus``.
    """
    t_k = _check_temperature(t_k)
    energies = {m: level_energy(params, m, b_mt) for m in ALLOWED_M}
    e0 = min(energies.values())
    theta = BOLTZMANN_GHZ_PER_K * t_k
    weights = {m: math.exp(-(e - e0) / theta) for m, e in energies.items()}
    z = sum(weights.values())
    occ = MappingProxyType({m: w / z for m, w in weights.items()})
    return ThermalState(
        field_mt=float(b_mt),
        temperature_k=t_k,
        occupancy=occ,
        total_ions=params.total_ions,
    )


def susceptibility_thermal(
    params: SpinSystemParams, b_mt: float, t_k: float
) -> Susceptibility:
    """Sub-ensemble susceptibilities from thermal populations.

    chi_plus is the occupancy difference between |+1/2> and |+3/2> (the
    two levels of the delta_m = +1 transition); chi_minus the analogue for
    |-1/2> and |-3/2>. Both tend to a Curie 1/T law once the thermal
    energy exceeds the level splittings and saturate to a constant when
    the upper sub-ensemble level freezes out.

    Raises
    ------
    ValidationError
        If either difference comes out negative, which signals a level
        ordering this two-level reduction does not describe.
    """
    state = populations(params, b_mt, t_k)
    occ = state.occupancy
    chi_plus = occ[0.5] - occ[1.5]
    chi_minus = occ[-0.5] - occ[-1.5]
    for name, value in (("chi_plus", chi_plus), ("chi_minus", chi_minus)):
        if value < -1e-15:
            raise ValidationError(
                f"{name} is negative at B = {b_mt} mT, T = {t_k} K; the "
                "transition levels are inverted there and the two-level "
                "reduction does not apply"
            )
    return Susceptibility(chi_plus=max(chi_plus, 0.0), chi_minus=max(chi_minus, 0.0))


def susceptibility_from_coupling(
    g_mhz: float, f0_ghz: float, filling: float
) -> float:
    """Susceptibility inferred from a measured collective coupling.

    Inverts g^2 = chi * filling * f0^2: the collective coupling of a
    magnetic ensemble grows with the square root of the net polarized
    population, so chi = (g / f0)^2 / filling with g converted to GHz.

    Parameters
    ----------
    g_mhz : float
        Measured collective coupling, MHz.
    f0_ghz : float
        Mode frequency, GHz.
    filling : float
        Magnetic filling factor of the mode, in (0, 1].
    """
    g_mhz = float(g_mhz)
    f0_ghz = float(f0_ghz)
    filling = float(filling)
    if not (math.isfinite(g_mhz) and g_mhz >= 0.0):
        raise ValidationError(f"coupling must be finite and >= 0 MHz, got {g_mhz}")
    if not (math.isfinite(f0_ghz) and f0_ghz > 0.0):
        raise ValidationError(f"mode frequency must be > 0 GHz, got {f0_ghz}")
    if not (math.isfinite(filling) and 0.0 < filling <= 1.0):
        raise ValidationError(f"filling factor must be in (0, 1], got {filling}")
    return (g_mhz * 1e-3 / f0_ghz) ** 2 / filling


def per_spin_coupling(
    g_ref_mhz: float,
    params: SpinSystemParams,
    b_ref_mt: float,
    t_ref_k: float,
    which: str,
) -> float:
    """Single-spin coupling from one measured collective coupling.

    Divides the measured g by sqrt(N) of the addressed sub-ensemble at
    the calibration point, giving the temperature-independent per-spin
    rate used to re-thermalize couplings elsewhere.
    """
    g_ref_mhz = float(g_ref_mhz)
    if not (math.isfinite(g_ref_mhz) and g_ref_mhz >= 0.0):
        raise ValidationError(
            f"reference coupling must be finite and >= 0 MHz, got {g_ref_mhz}"
        )
    state = populations(params, b_ref_mt, t_ref_k)
    n_ref = state.n_plus if which == "plus" else state.n_minus
    if which not in ("plus", "minus"):
        raise ValidationError(f"which must be 'plus' or 'minus', got {which!r}")
    if n_ref <= 0.0:
        raise ValidationError(
            "addressed sub-ensemble is empty at the calibration point"
        )
    return g_ref_mhz / math.sqrt(n_ref)


def coupling_from_temperature(
    g_single_mhz: float, params: SpinSystemParams, b_mt: float, t_k: float
) -> tuple[float, float]:
    """Collective couplings of both sub-ensembles at one (B, T) point.

    Parameters
    ----------
    g_single_mhz : float
        Per-spin coupling rate, MHz.
    params : SpinSystemParams
        Ladder parameters; total_ions sets the ensemble normalization.
    b_mt, t_k : float
        Field (mT) and temperature (K).

    Returns
    -------
    tuple of float
        (g_plus, g_minus) in MHz, each g_single * sqrt(N) of its
        sub-ensemble.
    """
    g_single_mhz = float(g_single_mhz)
    if not (math.isfinite(g_single_mhz) and g_single_mhz >= 0.0):
        raise ValidationError(
            f"per-spin coupling must be finite and >= 0 MHz, got {g_single_mhz}"
        )
    state = populations(params, b_mt, t_k)
    return (
        g_single_mhz * math.sqrt(state.n_plus),
        g_single_mhz * math.sqrt(state.n_minus),
    )
