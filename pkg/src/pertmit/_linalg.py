"""Dense solve helpers with conditioning guards, shared by the mitigation paths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import SingularMatrixError

#: Condition-number estimate at which direct solves switch to least squares.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Solution of one linear system plus how it was obtained."""

    x: np.ndarray
    condition: float
    used_lstsq: bool


def solve_with_condition(
    matrix: np.ndarray, rhs: np.ndarray, *, transposed: bool = False
) -> SolveResult:
    """Solve ``A x = b`` (or ``A^T x = b``) guarded by a condition estimate.

    One LU factorization supplies both the solution and a reciprocal
    condition estimate in the 1-norm.  When the estimated condition number
    reaches CONDITION_LIMIT the solve falls back to least squares and the
    result is flagged; callers decide whether the fallback is acceptable.
    """
    a = np.asarray(matrix, dtype=np.float64)
    b = np.asarray(rhs, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SingularMatrixError(f"expected a square system, got shape {a.shape}")
    anorm = np.linalg.norm(a, 1)
    lu, piv, info = lapack.dgetrf(a)
    if info < 0:
        raise SingularMatrixError(f"invalid LU input in argument {-info}")
    if info > 0 or anorm == 0.0:
        rcond = 0.0  # exactly singular factor
    else:
        rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    condition = np.inf if rcond == 0.0 else 1.0 / float(rcond)
    if condition < CONDITION_LIMIT:
        x, info = lapack.dgetrs(lu, piv, b, trans=1 if transposed else 0)
        if info != 0:
            raise SingularMatrixError("triangular solve failed after LU factorization")
        return SolveResult(x=x, condition=condition, used_lstsq=False)
    system = a.T if transposed else a
    x, *_ = np.linalg.lstsq(system, b, rcond=None)
    return SolveResult(x=x, condition=condition, used_lstsq=True)
