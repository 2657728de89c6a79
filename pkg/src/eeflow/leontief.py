"""Direct-requirement coefficients and the Leontief inverse."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .model import MrioDataset, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DENSE_LIMIT = 6000
POWER_ITERATIONS = 200
POWER_RTOL = 1e-6
FEASIBILITY_MARGIN = 1e-9
PROBE_COLUMNS = 8


class LeontiefError(RuntimeError):
    pass


class InfeasibleEconomyError(LeontiefError):
    """The coefficient matrix has spectral radius >= 1."""


class SingularMatrixError(LeontiefError):
    """I - A could not be factorized or inverted to the requested tolerance."""


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    a: np.ndarray
    zero_output_columns: tuple[int, ...] = ()

    @property
    def size(self) -> int:
        return self.a.shape[0]


def build_coefficients(d: MrioDataset) -> CoefficientMatrix:
    """a[h, k] = u[h, k] / o[k]; columns with zero output are left at zero."""
    use = np.asarray(d.intermediate_use, dtype=float)
    output = np.asarray(d.total_output, dtype=float)
    zero = output == 0
    safe = np.where(zero, 1.0, output)
    a = use / safe
    a[:, zero] = 0.0
    a.flags.writeable = False
    return CoefficientMatrix(a, tuple(int(k) for k in np.flatnonzero(zero)))


def spectral_radius(a, max_iter: int = POWER_ITERATIONS, rtol: float = POWER_RTOL) -> tuple[float, bool]:
    """Power-iteration estimate of the spectral radius of a nonnegative matrix.

    Iterates on ``A + I`` from the all-ones vector so the iterate stays
    strictly positive, and tracks the Collatz-Wielandt bounds
    ``min (Ax)_i / x_i <= rho <= max (Ax)_i / x_i``.  The returned estimate
    is the upper bound, so it never understates the radius.  The flag reports
    whether the bracket closed to ``rtol`` relative width.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n == 0:
        return 0.0, True
    x = np.ones(n)
    upper = np.inf
    for _ in range(max_iter):
        ax = a @ x
        ratio = ax / x
        upper = min(upper, float(ratio.max()))
        lower = float(ratio.min())
        if upper - lower <= rtol * upper:
            return upper, True
        x = ax + x
        x /= x.max()
    return upper, False


@dataclass(frozen=True, eq=False)
class LeontiefSystem:
    """Solved Leontief system.

    ``leontief_inverse`` is the explicit inverse for systems up to the dense
    limit; larger systems keep only an LU factorization of ``I - A`` and
    solve for columns on demand.
    """

    coefficient: CoefficientMatrix
    leontief_inverse: np.ndarray | None
    spectral_radius_estimate: float
    residual_norm: float
    _lu: tuple | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.coefficient.size

    @property
    def is_dense(self) -> bool:
        return self.leontief_inverse is not None

    def column(self, k: int) -> np.ndarray:
        k = int(k)
        if not 0 <= k < self.size:
            raise ValidationError(f"column {k} outside [0, {self.size})")
        if self.leontief_inverse is not None:
            return self.leontief_inverse[:, k].copy()
        e = np.zeros(self.size)
        e[k] = 1.0
        return scipy.linalg.lu_solve(self._lu, e)

    def left_multiply(self, r) -> np.ndarray:
        """``r @ inverse`` for a (m, n) matrix ``r`` without forming the inverse."""
        r = np.asarray(r, dtype=float)
        if self.leontief_inverse is not None:
            return r @ self.leontief_inverse
        return scipy.linalg.lu_solve(self._lu, r.T, trans=1).T


def _factorize(m: np.ndarray):
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            lu = scipy.linalg.lu_factor(m, check_finite=True)
        except (scipy.linalg.LinAlgWarning, np.linalg.LinAlgError, ValueError) as exc:
            raise SingularMatrixError(f"factorization of I - A failed: {exc}") from exc
    if np.any(np.diag(lu[0]) == 0):
        raise SingularMatrixError("I - A is singular (zero pivot)")
    return lu


def solve_leontief(cm: CoefficientMatrix, tol: float = DEFAULT_TOL, dense_limit: int = DENSE_LIMIT) -> LeontiefSystem:
    """Invert ``I - A`` after checking that the economy is productive.

    Raises :class:`InfeasibleEconomyError` when the spectral radius of ``A``
    is not below ``1 - 1e-9`` and :class:`SingularMatrixError` when the
    factorization fails or the max-abs residual of ``(I - A) X - I``
    exceeds ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = np.asarray(cm.a, dtype=float)
    n = a.shape[0]
    rho, converged = spectral_radius(a)
    logger.info("spectral radius estimate %.6g (converged=%s)", rho, converged)
    inconclusive = False
    if rho >= 1.0 - FEASIBILITY_MARGIN:
        if converged or n > dense_limit:
            raise InfeasibleEconomyError(f"spectral radius of A is {rho:.9g} >= 1; (I - A)^-1 is not economically meaningful")
        inconclusive = True

    m = np.eye(n) - a
    lu = _factorize(m)
    if n <= dense_limit:
        eye = np.eye(n)
        inv = scipy.linalg.lu_solve(lu, eye)
        resid = m @ inv - eye
        if np.abs(resid).max(initial=0.0) > tol:
            inv -= scipy.linalg.lu_solve(lu, resid)
            resid = m @ inv - eye
        residual = float(np.abs(resid).max(initial=0.0))
        if inconclusive:
            # An inverse-nonnegative Z-matrix I - A certifies rho(A) < 1.
            if inv.min(initial=0.0) < -1e-12 * max(1.0, np.abs(inv).max(initial=0.0)):
                raise InfeasibleEconomyError(f"spectral radius of A is not below 1 (estimate {rho:.9g})")
            logger.info("power iteration inconclusive; nonnegative inverse certifies feasibility")
        inv.flags.writeable = False
        system = LeontiefSystem(cm, inv, rho, residual, lu)
    else:
        probes = np.unique(np.linspace(0, n - 1, min(n, PROBE_COLUMNS)).astype(int))
        rhs = np.zeros((n, len(probes)))
        rhs[probes, np.arange(len(probes))] = 1.0
        cols = scipy.linalg.lu_solve(lu, rhs)
        residual = float(np.abs(m @ cols - rhs).max(initial=0.0))
        system = LeontiefSystem(cm, None, rho, residual, lu)
    if not np.isfinite(residual) or residual > tol:
        raise SingularMatrixError(f"residual {residual:.3g} of (I - A) X - I exceeds tolerance {tol:.3g}")
    logger.info("leontief solve: n=%d residual=%.3g dense=%s", n, residual, system.is_dense)
    return system


def leontief_column(ls: LeontiefSystem, k: int) -> np.ndarray:
    """Column ``k`` of the Leontief inverse (all l[h, k] for the fixed destination k)."""
    return ls.column(k)
