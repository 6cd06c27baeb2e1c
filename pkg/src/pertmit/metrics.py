"""Distance and observable-error metrics for judging mitigation quality."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitspace import check_qubit_count
from .errors import DimensionMismatchError, ValidationError
from .response import ProbabilityVector


def _values(p: ProbabilityVector | np.ndarray) -> np.ndarray:
    if isinstance(p, ProbabilityVector):
        return p.values
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"expected a vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class DiagonalObservable:
    """A diagonal operator with entries bounded by one.

    Any expectation value of such an operator moves by at most the trace
    distance between two distributions, so mitigation error in trace
    distance caps the error of every bounded diagonal observable.
    """

    n: int
    values: np.ndarray

    def __post_init__(self) -> None:
        check_qubit_count(self.n)
        v = np.asarray(self.values, dtype=np.float64).copy()
        if v.shape != (1 << self.n,):
            raise DimensionMismatchError(
                f"observable on {self.n} qubits must have length {1 << self.n}, got {v.shape}"
            )
        if np.any(np.abs(v) > 1.0):
            raise ValidationError("observable entries must lie in [-1, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def trace_distance(a: ProbabilityVector | np.ndarray, b: ProbabilityVector | np.ndarray) -> float:
    """L1 distance sum_j |a_j - b_j|; zero exactly for equal vectors.

    Accepts mitigated vectors with negative entries unchanged; the
    observable bound below holds for signed vectors too.
    """
    av, bv = _values(a), _values(b)
    if av.shape != bv.shape:
        raise DimensionMismatchError(f"cannot compare shapes {av.shape} and {bv.shape}")
    return float(np.sum(np.abs(av - bv)))


def expectation(obs: DiagonalObservable, p: ProbabilityVector | np.ndarray) -> float:
    """Weighted sum sum_j O_j p_j."""
    pv = _values(p)
    if pv.shape != obs.values.shape:
        raise DimensionMismatchError(
            f"observable of length {obs.values.shape[0]} cannot weight shape {pv.shape}"
        )
    return float(obs.values @ pv)
