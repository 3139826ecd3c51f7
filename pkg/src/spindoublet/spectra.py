"""Experiment-facing outputs: sweeps, transmission, gaps, peak counts.

A field sweep diagonalizes the coupled-mode matrix row by row while the
spin transition tunes through the doublet, producing the avoided-crossing
maps. A transmission spectrum drives the same matrix with complex
diagonal broadening and reads out |S21| through explicit port couplings.
The extraction helpers quantify what the maps show: the minimum gap of an
avoided crossing, the field displacement of a labelled branch, and the
number of resolved peaks in a spectrum.

Branch identity is always decided by polarization content (the squared
eigenvector weights), never by frequency order, because frequency order
swaps identities at every crossing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .cavityqed import (
    EnsembleCoupling,
    ModeDoublet,
    coupled_mode_matrix,
    eigenmodes,
)
from .errors import ValidationError
from .spinmodel import SpinSystemParams, transition
from .thermo import susceptibility_thermal

# Magnitudes may poke above 1 by solver rounding; anything beyond this is
# an inconsistent port budget, not noise.
_UNITARITY_SLACK = 1e-9


@dataclass(frozen=True)
class SweepRow:
    """Branches of one field point, ascending in frequency."""

    field_mt: float
    branches: tuple


@dataclass(frozen=True)
class SweepResult:
    """Eigenfrequency branches and their weights over a field grid."""

    which: str
    labels: tuple
    rows: tuple

    def fields(self) -> np.ndarray:
        """Field values, mT, in row order."""
        return np.array([row.field_mt for row in self.rows])

    def frequencies(self) -> np.ndarray:
        """Branch frequencies, GHz, shaped (rows, branches)."""
        return np.array(
            [[b.frequency_ghz for b in row.branches] for row in self.rows]
        )

    def fraction(self, label: str) -> np.ndarray:
        """Weight of one basis label per branch, shaped (rows, branches)."""
        if label not in self.labels:
            raise ValidationError(f"label {label!r} not in sweep basis {self.labels}")
        return np.array(
            [[b.fractions[label] for b in row.branches] for row in self.rows]
        )


@dataclass(frozen=True)
class TransmissionSpectrum:
    """|S21| sampled on a strictly increasing frequency grid."""

    frequency_ghz: np.ndarray = field(repr=False)
    magnitude: np.ndarray = field(repr=False)

    def __post_init__(self):
        f = np.asarray(self.frequency_ghz, dtype=float)
        m = np.asarray(self.magnitude, dtype=float)
        if f.ndim != 1 or f.size < 1 or f.shape != m.shape:
            raise ValidationError("spectrum needs matching 1-d grids")
        if f.size > 1 and not np.all(np.diff(f) > 0):
            raise ValidationError("frequency grid must be strictly increasing")
        if not np.all(np.isfinite(m)) or np.any(m < 0) or np.any(m > 1.0):
            raise ValidationError("magnitudes must be finite and within [0, 1]")


@dataclass(frozen=True)
class Ports:
    """Input and output coupling rates of the two photon modes, MHz."""

    in_r_mhz: float
    in_l_mhz: float
    out_r_mhz: float
    out_l_mhz: float

    def __post_init__(self):
        for name in ("in_r_mhz", "in_l_mhz", "out_r_mhz", "out_l_mhz"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValidationError(f"{name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class GapResult:
    """Location and size of the minimum separation of a branch pair."""

    field_mt: float
    gap_mhz: float


def _field_grid(b_grid_mt) -> np.ndarray:
    grid = np.asarray(b_grid_mt, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or not np.all(np.isfinite(grid)):
        raise ValidationError("field grid must be a non-empty finite 1-d array")
    return grid


def _transition_pair(spin: SpinSystemParams, b_mt: float) -> tuple[float, float]:
    f_plus = transition(spin, 0.5, 1.5, b_mt).frequency_ghz
    f_minus = transition(spin, -0.5, -1.5, b_mt).frequency_ghz
    return f_plus, f_minus


def _sweep(spin, doublet, which, grid, couplings_at) -> SweepResult:
    rows = []
    labels = None
    for b in grid:
        g_plus, g_minus = couplings_at(b)
        f_plus, f_minus = _transition_pair(spin, b)
        ensemble = EnsembleCoupling(
            g_plus_mhz=g_plus,
            g_minus_mhz=g_minus,
            gamma_mhz=0.0,
            f_plus_ghz=f_plus,
            f_minus_ghz=f_minus,
        )
        cm = coupled_mode_matrix(doublet, ensemble, which)
        labels = cm.labels
        rows.append(SweepRow(field_mt=float(b), branches=tuple(eigenmodes(cm))))
    return SweepResult(which=which, labels=labels, rows=tuple(rows))


def field_sweep_fixed(
    spin: SpinSystemParams,
    doublet: ModeDoublet,
    g_plus_mhz: float,
    g_minus_mhz: float,
    which: str,
    b_grid_mt,
) -> SweepResult:
    """Field sweep with both collective couplings held constant.

    The spin transition frequencies still follow the field; only the
    coupling strengths are frozen. This is the model the fitting module
    inverts, and the natural choice when a coupling was measured rather
    than derived from temperature.
    """
    grid = _field_grid(b_grid_mt)
    g_plus = float(g_plus_mhz)
    g_minus = float(g_minus_mhz)
    return _sweep(spin, doublet, which, grid, lambda b: (g_plus, g_minus))


def field_sweep(
    spin: SpinSystemParams,
    doublet: ModeDoublet,
    g_single_mhz: float,
    which: str,
    b_grid_mt,
    t_k: float,
) -> SweepResult:
    """Field sweep with thermally resolved collective couplings.

    Parameters
    ----------
    spin : SpinSystemParams
        Ladder parameters; total_ions normalizes the ensemble size.
    doublet : ModeDoublet
        Photon modes.
    g_single_mhz : float
        Per-spin coupling rate, MHz.
    which : str
        Spin transition kept in the model: "plus", "minus" or "none".
    b_grid_mt : array_like
        Field grid, mT, evaluated in the order given.
    t_k : float
        Temperature, K.

    Returns
    -------
    SweepResult
        One row per field point. Each collective coupling is the per-spin
        rate times the square root of the net polarized population of its
        sub-ensemble (lower level minus upper level). In the frozen
        low-temperature regime this reduces to sqrt(N) of the lower
        level; at a few kelvin the net polarization shrinks and both
        couplings collapse toward the backscattering scale, which is what
        removes the gyrotropic asymmetry there.
    """
    grid = _field_grid(b_grid_mt)
    g_single = float(g_single_mhz)
    if not (math.isfinite(g_single) and g_single >= 0.0):
        raise ValidationError(
            f"per-spin coupling must be finite and >= 0 MHz, got {g_single}"
        )

    def couplings(b):
        chi = susceptibility_thermal(spin, b, t_k)
        scale = spin.total_ions
        return (
            g_single * math.sqrt(scale * chi.chi_plus),
            g_single * math.sqrt(scale * chi.chi_minus),
        )

    return _sweep(spin, doublet, which, grid, couplings)


def transmission(
    doublet: ModeDoublet,
    ensemble: EnsembleCoupling,
    which: str,
    f_grid_ghz,
    ports: Ports | None = None,
) -> TransmissionSpectrum:
    """Transmission magnitude |S21| across the doublet.

    Drives the coupled-mode matrix as a linear response problem: each
    mode acquires the complex broadening -i(loss)/2 on the diagonal, the
    input port injects into the photon modes, and the output port reads
    them back out, so

        S21(f) = b_out . x,   (f I - M + i diag(loss)/2) x = i b_in

    with b_in/b_out the square roots of the port rates. At critical
    coupling (both port rates at half the mode loss, the default) a lone
    resonance transmits with unit peak magnitude and its squared
    magnitude has full width kappa.

    Parameters
    ----------
    doublet : ModeDoublet
        Photon modes with loss rates kappa.
    ensemble : EnsembleCoupling
        Spin mode parameters; gamma must be > 0 here.
    which : str
        "plus", "minus" or "none", as in coupled_mode_matrix.
    f_grid_ghz : array_like
        Strictly increasing probe frequencies, GHz.
    ports : Ports, optional
        Port rates in MHz. Defaults to critical coupling of both photon
        modes, kappa/2 in and out for each.

    Returns
    -------
    TransmissionSpectrum
        Magnitudes in [0, 1] on the given grid.
    """
    grid = np.asarray(f_grid_ghz, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or not np.all(np.isfinite(grid)):
        raise ValidationError("frequency grid must be a non-empty finite 1-d array")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValidationError("frequency grid must be strictly increasing")
    if which != "none" and ensemble.gamma_mhz <= 0.0:
        raise ValidationError("transmission requires a spin linewidth gamma > 0")
    if ports is None:
        ports = Ports(
            in_r_mhz=0.5 * doublet.kappa_r_mhz,
            in_l_mhz=0.5 * doublet.kappa_l_mhz,
            out_r_mhz=0.5 * doublet.kappa_r_mhz,
            out_l_mhz=0.5 * doublet.kappa_l_mhz,
        )

    cm = coupled_mode_matrix(doublet, ensemble, which)
    dim = len(cm.labels)
    loss_ghz = [doublet.kappa_r_mhz * 1e-3, doublet.kappa_l_mhz * 1e-3]
    b_in = [math.sqrt(ports.in_r_mhz * 1e-3), math.sqrt(ports.in_l_mhz * 1e-3)]
    b_out = [math.sqrt(ports.out_r_mhz * 1e-3), math.sqrt(ports.out_l_mhz * 1e-3)]
    if dim == 3:
        loss_ghz.append(ensemble.gamma_mhz * 1e-3)
        b_in.append(0.0)
        b_out.append(0.0)

    base = -cm.matrix + 0.5j * np.diag(loss_ghz)
    rhs = 1j * np.array(b_in, dtype=complex)
    out = np.array(b_out, dtype=complex)
    eye = np.eye(dim)
    magnitude = np.empty(grid.size)
    for k, f in enumerate(grid):
        x = numerics.solve_linear(f * eye + base, rhs)
        magnitude[k] = abs(np.dot(out, x))

    worst = float(magnitude.max())
    if worst > 1.0 + _UNITARITY_SLACK:
        raise ValidationError(
            f"|S21| reached {worst:.6g} > 1; port couplings exceed the loss budget"
        )
    np.clip(magnitude, 0.0, 1.0, out=magnitude)
    return TransmissionSpectrum(frequency_ghz=grid.copy(), magnitude=magnitude)


def count_peaks(spectrum: TransmissionSpectrum, prominence: float = 0.05) -> int:
    """Number of resolved peaks in a transmission spectrum.

    A local maximum counts when its prominence, the drop from the peak to
    the higher of the two enclosing valleys, exceeds ``prominence`` times
    the global maximum. Valleys extend on each side to the nearest point
    higher than the peak, or to the grid edge. Plateaus are compressed to
    a single sample first; boundary points are never peaks.

    Parameters
    ----------
    spectrum : TransmissionSpectrum
        Spectrum to analyze.
    prominence : float
        Relative prominence threshold in (0, 1).
    """
    prominence = float(prominence)
    if not 0.0 < prominence < 1.0:
        raise ValidationError(f"prominence must be in (0, 1), got {prominence}")
    y = [float(v) for v in spectrum.magnitude]
    compressed = [y[0]]
    for value in y[1:]:
        if value != compressed[-1]:
            compressed.append(value)
    n = len(compressed)
    top = max(compressed)
    if top <= 0.0 or n < 3:
        return 0
    threshold = prominence * top
    count = 0
    for i in range(1, n - 1):
        if not (compressed[i] > compressed[i - 1] and compressed[i] > compressed[i + 1]):
            continue
        peak = compressed[i]
        valleys = []
        for step in (-1, 1):
            j = i + step
            lowest = peak
            while 0 <= j < n and compressed[j] <= peak:
                lowest = min(lowest, compressed[j])
                j += step
            valleys.append(lowest)
        if peak - max(valleys) > threshold:
            count += 1
    return count


def extract_gap(sweep: SweepResult, pair: tuple[str, str] = ("L", "S")) -> GapResult:
    """Minimum separation of the branch pair carrying two basis labels.

    In every row the two branches holding the most combined weight of the
    requested labels are selected, and their separation is minimized over
    the sweep with three-point parabolic refinement around the grid
    minimum.

    Parameters
    ----------
    sweep : SweepResult
        Sweep with at least 3 rows on a strictly monotone field grid.
    pair : tuple of str
        Two distinct basis labels whose hybridized branches to follow.

    Returns
    -------
    GapResult
        Refined field location (mT) and gap size (MHz).

    Raises
    ------
    ValidationError
        If the separation is smallest at a grid edge, meaning no avoided
        crossing is bracketed by the sweep.
    """
    a, b = pair
    if a == b:
        raise ValidationError("branch pair must name two distinct labels")
    for label in pair:
        if label not in sweep.labels:
            raise ValidationError(f"label {label!r} not in sweep basis {sweep.labels}")
    if len(sweep.rows) < 3:
        raise ValidationError("gap extraction needs at least 3 sweep rows")
    fields = sweep.fields()
    steps = np.diff(fields)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValidationError("gap extraction needs a strictly monotone field grid")

    separation = np.empty(fields.size)
    for k, row in enumerate(sweep.rows):
        mass = np.array(
            [b_.fractions[a] + b_.fractions[b] for b_ in row.branches]
        )
        first, second = np.argsort(-mass, kind="stable")[:2]
        separation[k] = abs(
            row.branches[first].frequency_ghz - row.branches[second].frequency_ghz
        )

    k = int(np.argmin(separation))
    if k == 0 or k == fields.size - 1:
        raise ValidationError(
            "branch separation is smallest at the sweep edge; no avoided "
            "crossing is bracketed"
        )
    b_star, s_star = _parabolic_minimum(
        fields[k - 1 : k + 2], separation[k - 1 : k + 2]
    )
    return GapResult(field_mt=float(b_star), gap_mhz=float(max(s_star, 0.0)) * 1e3)


def _parabolic_minimum(x, y):
    # Vertex of the parabola through three points; falls back to the middle
    # sample when they are collinear.
    d21 = x[1] - x[0]
    d23 = x[1] - x[2]
    n21 = y[1] - y[2]
    n23 = y[1] - y[0]
    denom = d21 * n21 - d23 * n23
    if denom == 0.0:
        return x[1], y[1]
    xv = x[1] - 0.5 * (d21 * d21 * n21 - d23 * d23 * n23) / denom
    # Evaluate the interpolating parabola at the vertex via Lagrange form.
    def basis(xq, xa, xb, xc):
        return (xq - xb) * (xq - xc) / ((xa - xb) * (xa - xc))

    yv = (
        y[0] * basis(xv, x[0], x[1], x[2])
        + y[1] * basis(xv, x[1], x[0], x[2])
        + y[2] * basis(xv, x[2], x[0], x[1])
    )
    return xv, yv


def max_displacement(sweep: SweepResult, label: str, reference_ghz: float) -> float:
    """Largest excursion of a labelled branch from a reference frequency.

    In every row the branch is the one with the largest weight of
    ``label``, so identity follows polarization content through
    crossings. Returns the maximum of |frequency - reference| over the
    sweep, in MHz.
    """
    if label not in sweep.labels:
        raise ValidationError(f"label {label!r} not in sweep basis {sweep.labels}")
    reference = float(reference_ghz)
    if not math.isfinite(reference):
        raise ValidationError(f"reference frequency must be finite, got {reference}")
    worst = 0.0
    for row in sweep.rows:
        weights = [b.fractions[label] for b in row.branches]
        chosen = row.branches[int(np.argmax(weights))]
        worst = max(worst, abs(chosen.frequency_ghz - reference))
    return worst * 1e3
