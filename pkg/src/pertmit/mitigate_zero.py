"""Recovery of the all-zeros probability from a truncated response submatrix.

Restricting R to the low-weight subspace S_w (all bitstrings of weight at
most w) gives a small t_w x t_w system whose inverse's first row, dotted
with the restricted observed vector, approximates p_0 with error O((2q)^{w+1}).
This module provides the truncation, the recovery, and the analytic bounds
used to audit it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._linalg import solve_with_condition
from .bitspace import (
    SubspaceSelector,
    project_matrix,
    project_vector,
    weight_ordered_space,
    weight_subspace,
)
from .errors import DimensionMismatchError, SingularMatrixError, ValidationError
from .response import ProbabilityVector, ResponseMatrix

#: Relaxation-model zeros are exact products, so triangularity is judged
#: against an essentially-zero threshold rather than a numerical tolerance.
_TRIANGULAR_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class TruncatedResponse:
    """Projection R_T = P_w R P_w^T of a response matrix onto S_w."""

    n: int
    w: int
    selector: SubspaceSelector
    matrix: np.ndarray

    def __post_init__(self) -> None:
        t_w = self.selector.size
        m = np.asarray(self.matrix, dtype=np.float64).copy()
        if m.shape != (t_w, t_w):
            raise DimensionMismatchError(
                f"truncated matrix must be {t_w}x{t_w}, got {m.shape}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def truncate(R: ResponseMatrix, w: int) -> TruncatedResponse:
    """Project R onto the weight-at-most-w subspace, rows and columns in
    weight order."""
    if not 0 <= w <= R.n:
        raise ValidationError(f"truncation weight {w} out of range for n={R.n}")
    sel = weight_subspace(R.n, w)
    return TruncatedResponse(n=R.n, w=w, selector=sel, matrix=project_matrix(R.matrix, sel))


def recover_p0(T: TruncatedResponse, p_obs: ProbabilityVector, *, lstsq: bool = False) -> float:
    """Approximate the all-zeros probability from the truncated system.

    Solves T^t x = e_0 once (x is the first row of T^{-1}) and returns
    x . (P_w p').  Order w = 0 is defined as the uncorrected value p'_0.
    An ill-conditioned truncation raises unless ``lstsq`` permits the
    least-squares fallback.
    """
    if T.n != p_obs.n:
        raise DimensionMismatchError(
            f"truncation on {T.n} qubits cannot consume a {p_obs.n}-qubit vector"
        )
    if p_obs.flavor != "observed":
        raise ValidationError(f"recover_p0 expects an observed vector, got {p_obs.flavor!r}")
    if T.w == 0:
        return float(p_obs.values[0])
    e0 = np.zeros(T.selector.size)
    e0[0] = 1.0
    res = solve_with_condition(T.matrix, e0, transposed=True)
    if res.used_lstsq and not lstsq:
        raise SingularMatrixError(
            f"truncated system condition estimate {res.condition:.3e} is too high; "
            "increase w or pass lstsq=True"
        )
    return float(res.x @ project_vector(p_obs.values, T.selector))


def truncation_bound(q: float, w: int) -> float:
    """Worst-case recovery error (2q)^{w+1} for the uniform-rate relaxation model."""
    if not 0.0 <= q < 0.5:
        raise ValidationError(f"rate must satisfy 0 <= q < 0.5, got {q}")
    if w < 0:
        raise ValidationError(f"truncation order must be nonnegative, got {w}")
    return (2.0 * q) ** (w + 1)


def tensor_truncation_bound(rates: Sequence[float], w: int) -> float:
    """Worst-case recovery error (2 max_k q_k)^{w+1} for distinct relaxation rates."""
    if len(rates) == 0:
        raise ValidationError("at least one rate is required")
    return truncation_bound(max(rates), w)


def approximate_model_guide(q: float, w: int) -> float:
    """Empirical guide 2 (2q)^{w+1} for models that are only approximately
    relaxation-like; observed, not proven."""
    return 2.0 * truncation_bound(q, w)


def inverse_row_magnitude(rates: Sequence[float], index: int) -> float:
    """|first row of R^{-1}| at column ``index``: prod_k (q_k / (1-q_k))^{j_k}.

    Exact for relaxation-only tensor models with per-qubit rates; rates[0]
    belongs to the most significant bit.
    """
    n = len(rates)
    if not 0 <= int(index) < (1 << n):
        raise ValidationError(f"index {index} out of range for n={n}")
    out = 1.0
    for k, q in enumerate(rates):
        if not 0.0 <= q < 0.5:
            raise ValidationError(f"rate must satisfy 0 <= q < 0.5, got {q}")
        if (int(index) >> (n - 1 - k)) & 1:
            out *= q / (1.0 - q)
    return out


def first_row_closed_form(rates: Sequence[float], sel: SubspaceSelector) -> np.ndarray:
    """Signed first row of R^{-1} for the relaxation-only tensor model,
    restricted to a selector.

    Entry j is prod_k (-q_k / (1-q_k))^{j_k}: magnitudes from
    :func:`inverse_row_magnitude` with sign (-1)^{w(j)}.  Serves as the
    analytic oracle for the row :func:`recover_p0` obtains by solving.
    """
    n = len(rates)
    if n != sel.n:
        raise DimensionMismatchError(f"{n} rates for a selector on {sel.n} qubits")
    out = np.ones(sel.size)
    members = sel.members
    for k, q in enumerate(rates):
        if not 0.0 <= q < 0.5:
            raise ValidationError(f"rate must satisfy 0 <= q < 0.5, got {q}")
        bit = (members >> (n - 1 - k)) & 1
        out *= np.where(bit == 1, -q / (1.0 - q), 1.0)
    return out


@dataclass(frozen=True)
class ProjectionInverseCheck:
    """Outcome of comparing P_w R^{-1} P_w^T against (P_w R P_w^T)^{-1}."""

    applicable: bool
    consistent: bool | None
    max_deviation: float | None


def inverse_projection_check(
    R: ResponseMatrix, w: int, *, tol: float = 1e-10
) -> ProjectionInverseCheck:
    """Verify that projecting the inverse equals inverting the projection.

    The identity holds when R is upper triangular in weight order (the
    relaxation partial order); inputs without that structure are reported
    as inapplicable rather than failed.
    """
    if not 0 <= w <= R.n:
        raise ValidationError(f"truncation weight {w} out of range for n={R.n}")
    order = weight_ordered_space(R.n).order
    reordered = R.matrix[np.ix_(order, order)]
    below = np.tril(reordered, k=-1)
    if float(np.max(np.abs(below))) > _TRIANGULAR_TOL:
        return ProjectionInverseCheck(applicable=False, consistent=None, max_deviation=None)
    sel = weight_subspace(R.n, w)
    projected_inverse = project_matrix(np.linalg.inv(R.matrix), sel)
    inverted_projection = np.linalg.inv(project_matrix(R.matrix, sel))
    deviation = float(np.max(np.abs(projected_inverse - inverted_projection)))
    return ProjectionInverseCheck(
        applicable=True, consistent=deviation < tol, max_deviation=deviation
    )
