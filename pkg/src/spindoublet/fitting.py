"""Parameter extraction from avoided-crossing data.

The forward model is the one the sweeps use: a coupled-mode matrix whose
spin row tunes linearly with field, diagonalized at every observed field
point. The fit minimizes the weighted squared distance between measured
peak frequencies and their associated model branches with a damped
least-squares iteration (Levenberg-Marquardt style), using central
finite-difference Jacobians. Peak-to-branch association is recomputed at
every evaluation by a monotone minimum-cost alignment, followed by a
consistency pass that forbids association swaps between adjacent field
rows, the classic failure mode near a crossing.

A small power-law regressor for susceptibility-versus-temperature data
lives here too, since extracting the Curie exponent is the same kind of
inverse problem in miniature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cavityqed import EnsembleCoupling, ModeDoublet, coupled_mode_matrix
from .constants import BOHR_MAGNETON_GHZ_PER_T
from .errors import NumericalError, ValidationError
from . import numerics

# Model parameters the fit understands, in canonical order.
PARAM_NAMES = ("f_r_ghz", "f_l_ghz", "g_rl_mhz", "g_sel_mhz", "zfs_ghz", "g_factor")

DEFAULT_FREE = ("f_r_ghz", "f_l_ghz", "g_rl_mhz", "g_sel_mhz")

# Stopping thresholds, fixed. The gradient is of the half-sum-of-squares
# cost in GHz^2 per parameter unit.
GRADIENT_TOL = 1e-10
MAX_ITERATIONS = 200

_DEFAULT_BOUNDS = {
    "f_r_ghz": (1e-9, math.inf),
    "f_l_ghz": (1e-9, math.inf),
    "g_rl_mhz": (0.0, math.inf),
    "g_sel_mhz": (0.0, math.inf),
    "zfs_ghz": (0.0, math.inf),
    "g_factor": (1e-9, 10.0),
}

_DAMPING_START = 1e-3
_DAMPING_UP = 10.0
_DAMPING_DOWN = 3.0
_DAMPING_MAX = 1e12


@dataclass(frozen=True)
class Observation:
    """Measured peak frequencies at one field point.

    Peaks are stored sorted ascending regardless of input order.
    """

    field_mt: float
    peaks_ghz: tuple
    weight: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.field_mt):
            raise ValidationError(f"field must be finite, got {self.field_mt}")
        peaks = tuple(sorted(float(p) for p in self.peaks_ghz))
        if not peaks:
            raise ValidationError("observation needs at least one peak")
        if not all(math.isfinite(p) and p > 0 for p in peaks):
            raise ValidationError(f"peaks must be finite and > 0 GHz, got {peaks}")
        if not (math.isfinite(self.weight) and self.weight > 0):
            raise ValidationError(f"weight must be finite and > 0, got {self.weight}")
        object.__setattr__(self, "field_mt", float(self.field_mt))
        object.__setattr__(self, "peaks_ghz", peaks)
        object.__setattr__(self, "weight", float(self.weight))


@dataclass(frozen=True)
class FitResult:
    """Outcome of a coupled-mode fit.

    ``parameters`` holds the free parameters only; ``converged`` is True
    only when the gradient-norm stopping criterion was met, never on the
    iteration cap.
    """

    parameters: dict
    residual_rms_mhz: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class PowerLawFit:
    """Result of a log-log regression chi = amplitude * T**exponent."""

    exponent: float
    amplitude: float
    log_rms: float


def _model_branches(values: dict, which: str, fields_mt) -> list[np.ndarray]:
    """Ascending branch frequencies at every field, or raises ValidationError."""
    sign = 1.0 if which == "plus" else -1.0
    doublet = ModeDoublet(
        f_r_ghz=values["f_r_ghz"],
        f_l_ghz=values["f_l_ghz"],
        kappa_r_mhz=1.0,
        kappa_l_mhz=1.0,
        g_rl_mhz=values["g_rl_mhz"],
    )
    slope = sign * values["g_factor"] * BOHR_MAGNETON_GHZ_PER_T * 1e-3
    out = []
    for b in fields_mt:
        f_sel = values["zfs_ghz"] + slope * b
        ensemble = EnsembleCoupling(
            g_plus_mhz=values["g_sel_mhz"] if which == "plus" else 0.0,
            g_minus_mhz=values["g_sel_mhz"] if which == "minus" else 0.0,
            gamma_mhz=0.0,
            f_plus_ghz=f_sel,
            f_minus_ghz=f_sel,
        )
        cm = coupled_mode_matrix(doublet, ensemble, which)
        out.append(numerics.eigh(cm.matrix).values)
    return out


def _align(peaks, branches, weight):
    """Monotone minimum-cost assignment of peaks to distinct branches.

    Both sequences are ascending; the assignment preserves order, which
    keeps it unique and cheap. Returns (pattern, cost) with pattern the
    branch index for each peak.
    """
    m = len(peaks)
    k = len(branches)
    inf = math.inf
    # dp[i][j]: best cost matching first i peaks within first j branches.
    dp = [[0.0] * (k + 1)] + [[inf] * (k + 1) for _ in range(m)]
    for i in range(1, m + 1):
        for j in range(i, k + 1):
            stay = dp[i][j - 1]
            take = dp[i - 1][j - 1] + weight * (peaks[i - 1] - branches[j - 1]) ** 2
            dp[i][j] = take if take < stay else stay
    pattern = [0] * m
    j = k
    for i in range(m, 0, -1):
        while dp[i][j] == dp[i][j - 1] and j > i:
            j -= 1
        pattern[i - 1] = j - 1
        j -= 1
    return tuple(pattern), dp[m][k]


class _Problem:
    """Residual evaluator over a fixed, canonically ordered observation set."""

    def __init__(self, observations, which):
        self.observations = sorted(
            observations, key=lambda o: (o.field_mt, o.peaks_ghz)
        )
        self.which = which
        self.fields = [o.field_mt for o in self.observations]
        self.size = sum(len(o.peaks_ghz) for o in self.observations)

    def residuals(self, values: dict) -> np.ndarray | None:
        """Weighted residual vector, or None when the model is invalid."""
        try:
            branches = _model_branches(values, self.which, self.fields)
        except ValidationError:
            return None
        patterns = []
        for obs, freqs in zip(self.observations, branches):
            pattern, _ = _align(obs.peaks_ghz, freqs, obs.weight)
            patterns.append(pattern)
        # Consistency pass: adjacent rows with equally many peaks must use
        # the same association pattern; branch identity may not swap row
        # to row.
        for i in range(1, len(patterns)):
            if len(patterns[i]) == len(patterns[i - 1]):
                patterns[i] = patterns[i - 1]
        out = np.empty(self.size)
        pos = 0
        for obs, freqs, pattern in zip(self.observations, branches, patterns):
            root_w = math.sqrt(obs.weight)
            for peak, idx in zip(obs.peaks_ghz, pattern):
                out[pos] = root_w * (peak - freqs[idx])
                pos += 1
        if not np.all(np.isfinite(out)):
            bad = ~np.isfinite(out)
            pos = 0
            for obs in self.observations:
                if bad[pos : pos + len(obs.peaks_ghz)].any():
                    raise NumericalError(
                        f"non-finite model residual at B = {obs.field_mt} mT"
                    )
                pos += len(obs.peaks_ghz)
        return out


def fit_coupled_modes(
    observations,
    initial: dict,
    free=DEFAULT_FREE,
    bounds: dict | None = None,
    which: str = "plus",
) -> FitResult:
    """Least-squares fit of coupled-mode parameters to observed peaks.

    Parameters
    ----------
    observations : iterable of Observation
        Peak lists per field point. Input order never affects the result;
        observations are sorted internally.
    initial : dict
        Starting value for every name in ``PARAM_NAMES``; parameters not
        listed in ``free`` stay fixed at these values.
    free : sequence of str
        Parameter names to optimize, a subset of ``PARAM_NAMES``.
    bounds : dict, optional
        Per-name (low, high) overrides of the default physical bounds
        (non-negative couplings, positive frequencies, g-factor below 10).
    which : str
        Which spin transition the model carries, "plus" or "minus".

    Returns
    -------
    FitResult
        Free-parameter values at the minimum, weighted RMS residual in
        MHz, iterations used, and an honest convergence flag: True only
        when the gradient norm dropped below ``GRADIENT_TOL``.

    Raises
    ------
    ValidationError
        On an under-determined system (fewer peak frequencies than twice
        the number of free parameters), names outside ``PARAM_NAMES``,
        or an initial point that is out of bounds or produces no valid
        model.
    """
    if which not in ("plus", "minus"):
        raise ValidationError(f"which must be 'plus' or 'minus', got {which!r}")
    observations = [o for o in observations]
    if not observations:
        raise ValidationError("no observations given")
    for obs in observations:
        if not isinstance(obs, Observation):
            raise ValidationError("observations must be Observation instances")
        if len(obs.peaks_ghz) > 3:
            raise ValidationError(
                f"{len(obs.peaks_ghz)} peaks at B = {obs.field_mt} mT exceed "
                "the 3 branches of the model"
            )
    unknown = set(initial) - set(PARAM_NAMES)
    if unknown:
        raise ValidationError(f"unknown parameters {sorted(unknown)}")
    missing = set(PARAM_NAMES) - set(initial)
    if missing:
        raise ValidationError(f"initial guess is missing {sorted(missing)}")
    free = tuple(free)
    if len(set(free)) != len(free) or not set(free) <= set(PARAM_NAMES):
        raise ValidationError(
            f"free parameters must be distinct names from {PARAM_NAMES}, got {free}"
        )
    if not free:
        raise ValidationError("at least one parameter must be free")

    limits = dict(_DEFAULT_BOUNDS)
    for name, pair in (bounds or {}).items():
        if name not in PARAM_NAMES:
            raise ValidationError(f"bounds given for unknown parameter {name!r}")
        lo, hi = float(pair[0]), float(pair[1])
        if not lo < hi:
            raise ValidationError(f"bounds for {name} must satisfy low < high")
        limits[name] = (lo, hi)

    problem = _Problem(observations, which)
    if problem.size < 2 * len(free):
        raise ValidationError(
            f"{problem.size} peak frequencies cannot determine {len(free)} "
            "free parameters; need at least two data points per parameter"
        )

    values = {name: float(initial[name]) for name in PARAM_NAMES}
    for name in free:
        lo, hi = limits[name]
        if not lo <= values[name] <= hi:
            raise ValidationError(
                f"initial {name} = {values[name]} outside bounds ({lo}, {hi})"
            )

    x = np.array([values[name] for name in free])
    lo = np.array([limits[name][0] for name in free])
    hi = np.array([limits[name][1] for name in free])
    scale = np.maximum(np.abs(x), 1e-3)
    steps = 1e-6 * scale

    def evaluate(point):
        merged = dict(values)
        merged.update({name: float(v) for name, v in zip(free, point)})
        return problem.residuals(merged)

    residual = evaluate(x)
    if residual is None:
        raise ValidationError("initial parameters do not produce a valid model")
    cost = 0.5 * float(residual @ residual)

    damping = _DAMPING_START
    iterations = 0
    converged = False
    while iterations < MAX_ITERATIONS:
        iterations += 1
        jacobian = np.zeros((problem.size, len(free)))
        for i, h in enumerate(steps):
            xp = x.copy()
            xp[i] = min(x[i] + h, hi[i])
            xm = x.copy()
            xm[i] = max(x[i] - h, lo[i])
            rp = evaluate(xp)
            rm = evaluate(xm)
            if rp is not None and rm is not None and xp[i] > xm[i]:
                jacobian[:, i] = (rp - rm) / (xp[i] - xm[i])
            elif rp is not None and xp[i] > x[i]:
                jacobian[:, i] = (rp - residual) / (xp[i] - x[i])
            elif rm is not None and x[i] > xm[i]:
                jacobian[:, i] = (residual - rm) / (x[i] - xm[i])
        gradient = jacobian.T @ residual
        if float(np.max(np.abs(gradient))) < GRADIENT_TOL:
            converged = True
            break
        normal = jacobian.T @ jacobian
        diag = np.diag(normal).copy()
        floor = 1e-12 * float(diag.max()) if diag.max() > 0 else 1.0
        diag = np.maximum(diag, floor)

        stepped = False
        while damping <= _DAMPING_MAX:
            try:
                delta = numerics.solve_linear(
                    normal + damping * np.diag(diag), -gradient
                )
            except NumericalError:
                damping *= _DAMPING_UP
                continue
            trial = np.clip(x + delta.real, lo, hi)
            trial_residual = evaluate(trial)
            if trial_residual is not None:
                trial_cost = 0.5 * float(trial_residual @ trial_residual)
                if trial_cost < cost:
                    x = trial
                    residual = trial_residual
                    cost = trial_cost
                    damping = max(damping / _DAMPING_DOWN, 1e-15)
                    stepped = True
                    break
            damping *= _DAMPING_UP
        if not stepped:
            break

    rms_mhz = 1e3 * math.sqrt(2.0 * cost / problem.size)
    parameters = {name: float(v) for name, v in zip(free, x)}
    return FitResult(
        parameters=parameters,
        residual_rms_mhz=rms_mhz,
        iterations=iterations,
        converged=converged,
    )


def fit_power_law(samples, window: tuple[float, float] | None = None) -> PowerLawFit:
    """Ordinary least squares of log(chi) against log(T).

    Parameters
    ----------
    samples : iterable of (float, float)
        (temperature K, chi) pairs; chi must be positive.
    window : tuple, optional
        Inclusive (low, high) temperature window to restrict the fit to.

    Returns
    -------
    PowerLawFit
        Exponent (a Curie law gives -1), amplitude, and the RMS of the
        log-space residuals.
    """
    points = [(float(t), float(c)) for t, c in samples]
    if window is not None:
        t_lo, t_hi = float(window[0]), float(window[1])
        if not t_lo < t_hi:
            raise ValidationError("window must satisfy low < high")
        points = [(t, c) for t, c in points if t_lo <= t <= t_hi]
    if len(points) < 3:
        raise ValidationError(
            f"power-law fit needs at least 3 samples in the window, got {len(points)}"
        )
    for t, c in points:
        if not (math.isfinite(t) and t > 0):
            raise ValidationError(f"temperatures must be finite and > 0 K, got {t}")
        if not (math.isfinite(c) and c > 0):
            raise ValidationError(f"chi values must be finite and > 0, got {c}")
    log_t = np.log([t for t, _ in points])
    log_c = np.log([c for _, c in points])
    dt = log_t - log_t.mean()
    var = float(dt @ dt)
    if var == 0.0:
        raise ValidationError("all temperatures equal; exponent undefined")
    exponent = float(dt @ (log_c - log_c.mean())) / var
    intercept = float(log_c.mean()) - exponent * float(log_t.mean())
    fitted = intercept + exponent * log_t
    log_rms = float(np.sqrt(np.mean((log_c - fitted) ** 2)))
    return PowerLawFit(
        exponent=exponent, amplitude=math.exp(intercept), log_rms=log_rms
    )
