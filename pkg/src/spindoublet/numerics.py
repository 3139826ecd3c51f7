"""Self-contained dense linear algebra for small Hermitian problems.

Everything downstream (coupled-mode branches, Fock-space cross checks,
transmission response, least-squares steps) funnels through the two solvers
in this module, so they are written for determinism rather than raw speed:
the same input bits always produce the same output bits, independent of
BLAS build, thread count, or call history. The algorithms are therefore
fixed, a cyclic Jacobi iteration for Hermitian eigendecompositions and
Gaussian elimination with partial pivoting for linear solves, and the
accuracy tolerances are read-only module constants, not arguments.

Matrix dimensions here are small (coupled-mode systems of dimension 2 or
3, Fock blocks up to a few hundred), so cubic cost with a modest constant
is acceptable.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import NumericalError, ValidationError

# Hermiticity check: largest allowed |A[i,j] - conj(A[j,i])| relative to the
# largest matrix entry.
HERMITICITY_RTOL = 1e-12

# Eigenpair residual bound: ||A v - w v|| <= RESIDUAL_RTOL * ||A||.
RESIDUAL_RTOL = 1e-9

# Linear-solve residual bound: ||A x - b|| <= SOLVE_RTOL * (||A|| ||x|| + ||b||).
SOLVE_RTOL = 1e-9

# Condition estimate above which solve_linear refuses the system.
CONDITION_LIMIT = 1e12

# Jacobi sweep control. Rotations stop once every off-diagonal magnitude is
# below _OFFDIAG_STOP_RTOL times the largest entry of the input.
_OFFDIAG_STOP_RTOL = 1e-14
_MAX_SWEEPS = 64

# Dimension at or below which the scalar (pure Python) rotation loop is used.
# Small systems sit on hot paths in the fitter, where per-call numpy slicing
# overhead dominates; larger systems use vectorized row/column updates.
_SCALAR_DIM = 6


class EigenDecomposition(NamedTuple):
    """Eigenvalues in ascending order; eigenvector k is ``vectors[:, k]``."""

    values: np.ndarray
    vectors: np.ndarray


def validate_hermitian(a) -> np.ndarray:
    """Check that ``a`` is a finite square Hermitian matrix.

    Parameters
    ----------
    a : array_like
        Candidate matrix.

    Returns
    -------
    numpy.ndarray
        Complex copy of ``a``.

    Raises
    ------
    ValidationError
        If the matrix is not square, contains non-finite entries, or
        deviates from Hermitian symmetry by more than ``HERMITICITY_RTOL``
        relative to its largest entry. The error names the offending
        index pair.
    """
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValidationError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix contains non-finite entries")
    scale = float(np.max(np.abs(m)))
    deviation = np.abs(m - m.conj().T)
    i, j = np.unravel_index(int(np.argmax(deviation)), deviation.shape)
    if deviation[i, j] > HERMITICITY_RTOL * max(scale, 1e-300):
        raise ValidationError(
            f"matrix is not Hermitian: entries ({i}, {j}) and ({j}, {i}) "
            f"differ by {deviation[i, j]:.3e}, tolerance "
            f"{HERMITICITY_RTOL * scale:.3e}"
        )
    return m


def _rotation(alpha: float, beta: float, g: complex):
    """Jacobi rotation parameters annihilating the (p, q) entry.

    Returns (c, s, phase) for the unitary that is the identity outside the
    (p, q) plane and [[c, -s*phase], [s*conj(phase), c]] inside it.
    """
    absg = abs(g)
    phase = g / absg
    tau = (beta - alpha) / (2.0 * absg)
    # small-magnitude root of t^2 - 2*tau*t - 1 = 0
    if tau >= 0.0:
        t = -1.0 / (tau + math.sqrt(1.0 + tau * tau))
    else:
        t = 1.0 / (-tau + math.sqrt(1.0 + tau * tau))
    c = 1.0 / math.sqrt(1.0 + t * t)
    return c, t * c, phase


def _jacobi_scalar(m: np.ndarray, stop: float):
    """Cyclic Jacobi on nested lists; fastest below ``_SCALAR_DIM``."""
    n = m.shape[0]
    a = [[complex(m[i, k]) for k in range(n)] for i in range(n)]
    v = [[1.0 + 0.0j if i == k else 0.0j for k in range(n)] for i in range(n)]
    for _ in range(_MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            row = a[p]
            for q in range(p + 1, n):
                if abs(row[q]) > off:
                    off = abs(row[q])
        if off <= stop:
            diag = np.array([a[i][i].real for i in range(n)])
            return diag, np.array(v)
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = a[p][q]
                if abs(g) <= stop:
                    continue
                c, s, phase = _rotation(a[p][p].real, a[q][q].real, g)
                sph = s * phase
                sphc = s * phase.conjugate()
                absg = abs(g)
                app = a[p][p].real
                aqq = a[q][q].real
                new_pp = app * c * c + 2.0 * c * s * absg + aqq * s * s
                new_qq = app * s * s - 2.0 * c * s * absg + aqq * c * c
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = a[k][p]
                    akq = a[k][q]
                    a[k][p] = c * akp + sphc * akq
                    a[k][q] = -sph * akp + c * akq
                    a[p][k] = a[k][p].conjugate()
                    a[q][k] = a[k][q].conjugate()
                a[p][p] = new_pp
                a[q][q] = new_qq
                a[p][q] = 0.0j
                a[q][p] = 0.0j
                for k in range(n):
                    vkp = v[k][p]
                    vkq = v[k][q]
                    v[k][p] = c * vkp + sphc * vkq
                    v[k][q] = -sph * vkp + c * vkq
    raise NumericalError(f"Jacobi iteration did not converge in {_MAX_SWEEPS} sweeps")


def _jacobi_vector(m: np.ndarray, stop: float):
    """Cyclic Jacobi with numpy row/column updates for larger matrices."""
    n = m.shape[0]
    a = m.copy()
    v = np.eye(n, dtype=complex)
    for _ in range(_MAX_SWEEPS):
        off = float(np.max(np.abs(a - np.diag(np.diagonal(a)))))
        if off <= stop:
            return np.diagonal(a).real.copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = a[p, q]
                if abs(g) <= stop:
                    continue
                c, s, phase = _rotation(a[p, p].real, a[q, q].real, g)
                sph = s * phase
                sphc = s * phase.conjugate()
                absg = abs(g)
                app = a[p, p].real
                aqq = a[q, q].real
                new_pp = app * c * c + 2.0 * c * s * absg + aqq * s * s
                new_qq = app * s * s - 2.0 * c * s * absg + aqq * c * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p + sphc * col_q
                a[:, q] = -sph * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p + sph * row_q
                a[q, :] = -sphc * row_p + c * row_q
                a[p, p] = new_pp
                a[q, q] = new_qq
                a[p, q] = 0.0
                a[q, p] = 0.0
                col_p = v[:, p].copy()
                col_q = v[:, q].copy()
                v[:, p] = c * col_p + sphc * col_q
                v[:, q] = -sph * col_p + c * col_q
    raise NumericalError(f"Jacobi iteration did not converge in {_MAX_SWEEPS} sweeps")


def eigh(a) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    a : array_like
        Hermitian matrix (validated, see ``validate_hermitian``).

    Returns
    -------
    EigenDecomposition
        ``values`` real and ascending, ``vectors`` orthonormal with
        eigenvector k in column k. Each column's phase is fixed so that
        its largest-magnitude component is real and positive, which makes
        the output a pure function of the input bits.

    Raises
    ------
    ValidationError
        If the input fails the Hermiticity check.
    NumericalError
        If the iteration does not converge (not observed in practice;
        Jacobi converges quadratically on Hermitian input).
    """
    m = validate_hermitian(a)
    # Fold the sub-tolerance asymmetry away so the iteration sees an exactly
    # Hermitian matrix with a real diagonal.
    m = 0.5 * (m + m.conj().T)
    n = m.shape[0]
    scale = float(np.max(np.abs(m)))
    if scale == 0.0:
        return EigenDecomposition(np.zeros(n), np.eye(n, dtype=complex))
    stop = _OFFDIAG_STOP_RTOL * scale
    if n == 1:
        return EigenDecomposition(np.array([m[0, 0].real]), np.ones((1, 1), dtype=complex))
    if n <= _SCALAR_DIM:
        diag, vectors = _jacobi_scalar(m, stop)
    else:
        diag, vectors = _jacobi_vector(m, stop)
    order = np.argsort(diag, kind="stable")
    values = diag[order]
    vectors = vectors[:, order]
    for k in range(n):
        col = vectors[:, k]
        j = int(np.argmax(np.abs(col)))
        pivot = col[j]
        col *= pivot.conjugate() / abs(pivot)
        col /= math.sqrt(float(np.real(np.vdot(col, col))))
        vectors[:, k] = col
    residual = float(np.max(np.abs(m @ vectors - vectors * values[np.newaxis, :])))
    if residual > RESIDUAL_RTOL * scale:
        raise NumericalError(
            f"eigenpair residual {residual:.3e} exceeds {RESIDUAL_RTOL * scale:.3e}"
        )
    return EigenDecomposition(values, vectors)


def solve_linear(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` by Gaussian elimination with partial pivoting.

    Parameters
    ----------
    a : array_like
        Square matrix, real or complex.
    b : array_like
        Right-hand side, one vector or a matrix of stacked columns.

    Returns
    -------
    numpy.ndarray
        Solution with the same trailing shape as ``b``.

    Raises
    ------
    ValidationError
        On shape mismatch or non-finite input.
    NumericalError
        If the matrix is singular, the pivot-growth condition estimate
        exceeds ``CONDITION_LIMIT``, or the final residual violates
        ``SOLVE_RTOL``. The estimate is the crude ratio of extreme pivot
        magnitudes; it flags the near-singular systems this package can
        produce, not general ill-conditioning.
    """
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValidationError(f"expected a non-empty square matrix, got shape {m.shape}")
    rhs = np.array(b, dtype=complex)
    vector_rhs = rhs.ndim == 1
    if vector_rhs:
        rhs = rhs[:, np.newaxis]
    if rhs.ndim != 2 or rhs.shape[0] != m.shape[0]:
        raise ValidationError(
            f"right-hand side shape {np.shape(b)} does not match matrix "
            f"dimension {m.shape[0]}"
        )
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(rhs))):
        raise ValidationError("linear system contains non-finite entries")

    norm_a = float(np.max(np.abs(m)))
    norm_b = float(np.max(np.abs(rhs)))
    n = m.shape[0]
    u = m.copy()
    y = rhs.copy()
    for k in range(n):
        piv = k + int(np.argmax(np.abs(u[k:, k])))
        if abs(u[piv, k]) == 0.0:
            raise NumericalError(f"matrix is singular (zero pivot at column {k})")
        if piv != k:
            u[[k, piv], :] = u[[piv, k], :]
            y[[k, piv], :] = y[[piv, k], :]
        mult = u[k + 1:, k] / u[k, k]
        u[k + 1:, k:] -= np.outer(mult, u[k, k:])
        y[k + 1:, :] -= np.outer(mult, y[k, :])

    pivots = np.abs(np.diagonal(u))
    cond_estimate = float(np.max(pivots) / np.min(pivots))
    if cond_estimate > CONDITION_LIMIT:
        raise NumericalError(
            f"matrix is ill-conditioned (pivot ratio estimate {cond_estimate:.3e} "
            f"exceeds {CONDITION_LIMIT:.1e})"
        )

    x = np.zeros_like(y)
    for k in range(n - 1, -1, -1):
        x[k, :] = (y[k, :] - u[k, k + 1:] @ x[k + 1:, :]) / u[k, k]

    residual = float(np.max(np.abs(m @ x - rhs)))
    bound = SOLVE_RTOL * (norm_a * float(np.max(np.abs(x))) + norm_b)
    if residual > max(bound, 1e-300):
        raise NumericalError(
            f"solve residual {residual:.3e} exceeds {bound:.3e}"
        )
    return x[:, 0] if vector_rhs else x
