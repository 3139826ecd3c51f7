"""Hamiltonians of the doublet-plus-ensemble system.

Two representations of the same physics live here. The coupled-mode
matrix is the small Hermitian matrix (2x2 or 3x3) obtained by treating
the unsaturated spin sub-ensemble as one more harmonic oscillator; its
eigenvalues are the hybridized resonance frequencies plotted against
field. The Fock Hamiltonian is the exact excitation-conserving model on
a truncated photon-number times spin-1/2 product basis; it is small
enough to diagonalize brute force and serves as the reference the
coupled-mode picture is verified against, dark states aside.

Selection rules are baked into both: a left-circular photon exchanges
excitation only with the spin-increasing transition and a right-circular
photon only with the spin-decreasing one, so one off-diagonal element of
the coupled-mode matrix is exactly zero and the Fock exchange terms pair
each photon mode with a single sub-ensemble.

All matrices are in GHz. Couplings are passed in MHz and converted once,
at matrix assembly; loss rates never enter a Hamiltonian and belong to
the response functions in ``spectra``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .errors import ValidationError

_WHICH = ("plus", "minus", "none")

# Largest Fock matrix the reference model will build.
MAX_FOCK_DIM = 4096


def _check_rate(name: str, value: float, positive: bool = False) -> float:
    value = float(value)
    lo_ok = value > 0.0 if positive else value >= 0.0
    if not (math.isfinite(value) and lo_ok):
        bound = "> 0" if positive else ">= 0"
        raise ValidationError(f"{name} must be finite and {bound}, got {value}")
    return value


@dataclass(frozen=True)
class ModeDoublet:
    """The two counter-propagating, circularly polarized cavity modes.

    Attributes
    ----------
    f_r_ghz, f_l_ghz : float
        Resonance frequencies of the right- and left-circular modes, GHz.
    kappa_r_mhz, kappa_l_mhz : float
        Photon loss rates, MHz, both > 0.
    g_rl_mhz : float
        Backscattering coupling between the two photon modes, MHz, >= 0.
    """

    f_r_ghz: float
    f_l_ghz: float
    kappa_r_mhz: float
    kappa_l_mhz: float
    g_rl_mhz: float = 0.0

    def __post_init__(self):
        for name in ("f_r_ghz", "f_l_ghz"):
            _check_rate(name, getattr(self, name), positive=True)
        for name in ("kappa_r_mhz", "kappa_l_mhz"):
            _check_rate(name, getattr(self, name), positive=True)
        _check_rate("g_rl_mhz", self.g_rl_mhz)
        if abs(self.f_r_ghz - self.f_l_ghz) >= 0.01 * self.f_r_ghz:
            raise ValidationError(
                "doublet partners must lie within 1% of each other, got "
                f"f_r = {self.f_r_ghz} GHz and f_l = {self.f_l_ghz} GHz"
            )


@dataclass(frozen=True)
class EnsembleCoupling:
    """Collective couplings and line parameters of the two sub-ensembles.

    Attributes
    ----------
    g_plus_mhz, g_minus_mhz : float
        Collective couplings of the spin-increasing and spin-decreasing
        sub-ensembles, MHz, >= 0.
    gamma_mhz : float
        Spin resonance linewidth, MHz, >= 0 here; response functions
        additionally require it to be > 0.
    f_plus_ghz, f_minus_ghz : float
        Transition frequencies of the two sub-ensembles, GHz.
    """

    g_plus_mhz: float
    g_minus_mhz: float
    gamma_mhz: float
    f_plus_ghz: float
    f_minus_ghz: float

    def __post_init__(self):
        _check_rate("g_plus_mhz", self.g_plus_mhz)
        _check_rate("g_minus_mhz", self.g_minus_mhz)
        _check_rate("gamma_mhz", self.gamma_mhz)
        _check_rate("f_plus_ghz", self.f_plus_ghz, positive=True)
        _check_rate("f_minus_ghz", self.f_minus_ghz, positive=True)


@dataclass(frozen=True)
class CoupledModeMatrix:
    """Hermitian coupled-mode matrix with labelled basis.

    The basis is ("R", "L") for the photon-only model and ("R", "L", "S")
    when a collective spin oscillator is included. The selection rule
    shows up as an exact zero: element (R, S) vanishes when the spin mode
    is the spin-increasing transition, element (L, S) when it is the
    spin-decreasing one.
    """

    which: str
    labels: tuple
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.which not in _WHICH:
            raise ValidationError(f"which must be one of {_WHICH}, got {self.which!r}")
        m = np.asarray(self.matrix)
        n = len(self.labels)
        if m.shape != (n, n):
            raise ValidationError(
                f"matrix shape {m.shape} does not match {n} basis labels"
            )
        numerics.validate_hermitian(m)
        if self.which == "plus" and m[0, 2] != 0.0:
            raise ValidationError("selection rule requires a zero (R, S) element")
        if self.which == "minus" and m[1, 2] != 0.0:
            raise ValidationError("selection rule requires a zero (L, S) element")


@dataclass(frozen=True)
class Branch:
    """One hybridized eigenmode: frequency plus basis-label weights."""

    frequency_ghz: float
    fractions: dict


@dataclass(frozen=True)
class FockHamiltonian:
    """Truncated product-basis Hamiltonian of the full exchange model.

    Basis states are tuples (n_R, n_L, s_1, ..., s_N) with photon numbers
    up to n_max and one bit per spin, enumerated lexicographically with
    the spin-increasing ensemble's spins first. Matrix elements conserve
    the total excitation n_R + n_L + sum(s).
    """

    n_max: int
    n_plus: int
    n_minus: int
    basis: tuple
    matrix: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def excitations(self) -> np.ndarray:
        """Total excitation number of every basis state."""
        return np.array([s[0] + s[1] + sum(s[2:]) for s in self.basis])


def coupled_mode_matrix(
    doublet: ModeDoublet, ensemble: EnsembleCoupling, which: str
) -> CoupledModeMatrix:
    """Assemble the coupled-mode matrix for one tuned spin transition.

    Parameters
    ----------
    doublet : ModeDoublet
        Photon modes and their backscattering coupling.
    ensemble : EnsembleCoupling
        Collective couplings and transition frequencies.
    which : str
        "plus" places the spin-increasing transition in the basis (it
        exchanges with L photons only), "minus" the spin-decreasing one
        (R photons only), "none" drops the spin row entirely.

    Returns
    -------
    CoupledModeMatrix
        Basis ("R", "L") or ("R", "L", "S"); entries in GHz.
    """
    if which not in _WHICH:
        raise ValidationError(f"which must be one of {_WHICH}, got {which!r}")
    g_rl = doublet.g_rl_mhz * 1e-3
    if which == "none":
        m = np.array(
            [
                [doublet.f_r_ghz, g_rl],
                [g_rl, doublet.f_l_ghz],
            ]
        )
        return CoupledModeMatrix(which=which, labels=("R", "L"), matrix=m)
    if which == "plus":
        f_s = ensemble.f_plus_ghz
        g_s = ensemble.g_plus_mhz * 1e-3
        row = [0.0, g_s]
    else:
        f_s = ensemble.f_minus_ghz
        g_s = ensemble.g_minus_mhz * 1e-3
        row = [g_s, 0.0]
    m = np.array(
        [
            [doublet.f_r_ghz, g_rl, row[0]],
            [g_rl, doublet.f_l_ghz, row[1]],
            [row[0], row[1], f_s],
        ]
    )
    return CoupledModeMatrix(which=which, labels=("R", "L", "S"), matrix=m)


def eigenmodes(cm: CoupledModeMatrix) -> list[Branch]:
    """Hybridized branches of a coupled-mode matrix.

    Returns
    -------
    list of Branch
        Sorted ascending in frequency. Each branch carries the squared
        moduli of its eigenvector components keyed by basis label; the
        weights sum to 1.
    """
    decomposition = numerics.eigh(cm.matrix)
    branches = []
    for i, value in enumerate(decomposition.values):
        vec = decomposition.vectors[:, i]
        weights = np.abs(vec) ** 2
        fractions = {label: float(w) for label, w in zip(cm.labels, weights)}
        branches.append(Branch(frequency_ghz=float(value), fractions=fractions))
    return branches


def build_fock_hamiltonian(
    doublet: ModeDoublet,
    g_single_plus_mhz: float,
    g_single_minus_mhz: float,
    f_plus_ghz: float,
    f_minus_ghz: float,
    n_plus: int,
    n_minus: int,
    n_max: int,
) -> FockHamiltonian:
    """Exact exchange Hamiltonian on the truncated product basis.

    Implements, per spin, the excitation-conserving exchange with the
    photon mode its selection rule allows: each spin of the increasing
    sub-ensemble exchanges with the L mode at per-spin rate
    ``g_single_plus_mhz`` and each spin of the decreasing sub-ensemble
    with the R mode at ``g_single_minus_mhz``; the photon modes exchange
    through the doublet's g_RL. Spin energies enter as +- f/2.

    Parameters
    ----------
    doublet : ModeDoublet
        Photon frequencies and backscattering coupling.
    g_single_plus_mhz, g_single_minus_mhz : float
        Per-spin exchange rates, MHz.
    f_plus_ghz, f_minus_ghz : float
        Spin transition frequencies, GHz.
    n_plus, n_minus : int
        Sub-ensemble sizes; their sum is capped at 6.
    n_max : int
        Photon-number cutoff per mode, in [1, 3].

    Returns
    -------
    FockHamiltonian
        Real symmetric matrix of dimension (n_max+1)^2 * 2^(N_+ + N_-).
    """
    n_plus = int(n_plus)
    n_minus = int(n_minus)
    n_max = int(n_max)
    if n_plus < 0 or n_minus < 0 or n_plus + n_minus > 6:
        raise ValidationError(
            f"spin counts must be >= 0 with N_+ + N_- <= 6, got {n_plus}, {n_minus}"
        )
    if not 1 <= n_max <= 3:
        raise ValidationError(f"photon cutoff must be in [1, 3], got {n_max}")
    g_plus = _check_rate("g_single_plus_mhz", g_single_plus_mhz) * 1e-3
    g_minus = _check_rate("g_single_minus_mhz", g_single_minus_mhz) * 1e-3
    f_plus = _check_rate("f_plus_ghz", f_plus_ghz, positive=True)
    f_minus = _check_rate("f_minus_ghz", f_minus_ghz, positive=True)
    g_rl = doublet.g_rl_mhz * 1e-3

    n_spins = n_plus + n_minus
    n_photon = n_max + 1
    dim = n_photon * n_photon * (1 << n_spins)
    if dim > MAX_FOCK_DIM:
        raise ValidationError(
            f"Fock dimension {dim} exceeds the supported maximum {MAX_FOCK_DIM}"
        )

    # Spin i occupies bit (n_spins - 1 - i) so that enumerating the integer
    # index walks the basis lexicographically, plus-ensemble spins first.
    spin_freq = [f_plus] * n_plus + [f_minus] * n_minus
    spin_rate = [g_plus] * n_plus + [g_minus] * n_minus
    spin_mode = ["L"] * n_plus + ["R"] * n_minus
    bit = [1 << (n_spins - 1 - i) for i in range(n_spins)]

    h = np.zeros((dim, dim))
    basis = []
    for idx in range(dim):
        spins = idx & ((1 << n_spins) - 1)
        n_l = (idx >> n_spins) % n_photon
        n_r = (idx >> n_spins) // n_photon
        basis.append(
            (n_r, n_l)
            + tuple((spins >> (n_spins - 1 - i)) & 1 for i in range(n_spins))
        )

        diag = doublet.f_r_ghz * n_r + doublet.f_l_ghz * n_l
        for i in range(n_spins):
            diag += 0.5 * spin_freq[i] if spins & bit[i] else -0.5 * spin_freq[i]
        h[idx, idx] = diag

        # Backscattering a_R† a_L and its conjugate.
        if n_l >= 1 and n_r + 1 <= n_max:
            tgt = (((n_r + 1) * n_photon) + (n_l - 1)) * (1 << n_spins) + spins
            amp = g_rl * math.sqrt((n_r + 1) * n_l)
            h[tgt, idx] += amp
            h[idx, tgt] += amp

        # Spin-photon exchange sigma+ a and its conjugate, selection-ruled.
        for i in range(n_spins):
            rate = spin_rate[i]
            if rate == 0.0:
                continue
            n_mode = n_l if spin_mode[i] == "L" else n_r
            if not spins & bit[i] and n_mode >= 1:
                new_r, new_l = (
                    (n_r, n_l - 1) if spin_mode[i] == "L" else (n_r - 1, n_l)
                )
                tgt = ((new_r * n_photon) + new_l) * (1 << n_spins) + (spins | bit[i])
                amp = rate * math.sqrt(n_mode)
                h[tgt, idx] += amp
                h[idx, tgt] += amp

    return FockHamiltonian(
        n_max=n_max,
        n_plus=n_plus,
        n_minus=n_minus,
        basis=tuple(basis),
        matrix=h,
    )


def single_excitation_spectrum(fock: FockHamiltonian) -> np.ndarray:
    """Eigenvalues of the one-excitation block, referenced to the vacuum.

    Returns
    -------
    numpy.ndarray
        Ascending frequencies in GHz of all states carrying exactly one
        excitation (one photon or one flipped spin), with the vacuum
        energy subtracted so a bare photon state sits at its mode
        frequency.
    """
    exc = fock.excitations()
    ivac = np.flatnonzero(exc == 0)
    ione = np.flatnonzero(exc == 1)
    if ivac.size != 1:
        raise ValidationError("basis does not contain a unique vacuum state")
    if ione.size == 0:
        raise ValidationError("basis contains no single-excitation states")
    vacuum = fock.matrix[ivac[0], ivac[0]]
    block = fock.matrix[np.ix_(ione, ione)]
    decomposition = numerics.eigh(block)
    return decomposition.values - vacuum
