"""Response-matrix models: construction, application, and dense inversion.

A response matrix R is a column-stochastic 2^n x 2^n matrix of transition
probabilities R[i, j] = p(observed i | prepared j).  Readout error acts on a
distribution as p' = R p, and mitigation is some approximation to R^{-1} p'.
All matrices are stored dense in natural numeric index order; weight-ordered
views are produced on demand through :mod:`pertmit.bitspace`.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._linalg import solve_with_condition
from .bitspace import check_qubit_count
from .errors import DimensionMismatchError, ValidationError

#: Stochasticity tolerance for generated matrices (exact analytically;
#: the slack only covers floating-point accumulation).
COLUMN_SUM_TOL = 1e-10

#: Normalization tolerance for prior/observed distributions.
VECTOR_SUM_TOL = 1e-10

_FLAVORS = ("prior", "observed", "mitigated")


def _freeze(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SingleQubitResponse:
    """2x2 transition matrix [[p(0|0), p(0|1)], [p(1|0), p(1|1)]]."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = _freeze(self.matrix)
        if m.shape != (2, 2):
            raise ValidationError(f"single-qubit response must be 2x2, got {m.shape}")
        if np.any(m < 0.0) or np.any(m > 1.0):
            raise ValidationError("single-qubit transition probabilities must lie in [0, 1]")
        sums = m.sum(axis=0)
        if np.any(np.abs(sums - 1.0) > 1e-12):
            raise ValidationError(f"single-qubit columns must sum to 1, got {sums}")
        object.__setattr__(self, "matrix", m)


def single_qubit_relaxation(q: float) -> SingleQubitResponse:
    """Relaxation-only factor [[1, q], [0, 1-q]]: only 1 -> 0 flips occur."""
    if not 0.0 <= q < 0.5:
        raise ValidationError(f"relaxation rate must satisfy 0 <= q < 0.5, got {q}")
    return SingleQubitResponse(np.array([[1.0, q], [0.0, 1.0 - q]]))


def single_qubit_flip(epsilon: float, eta: float) -> SingleQubitResponse:
    """General factor [[1-eta, epsilon], [eta, 1-epsilon]] with both flip rates."""
    return SingleQubitResponse(np.array([[1.0 - eta, epsilon], [eta, 1.0 - epsilon]]))


@dataclass(frozen=True, eq=False)
class ResponseMatrix:
    """Dense column-stochastic 2^n x 2^n transition matrix in numeric order."""

    n: int
    matrix: np.ndarray
    provenance: Mapping | None = field(default=None)

    def __post_init__(self) -> None:
        check_qubit_count(self.n)
        m = _freeze(self.matrix)
        size = 1 << self.n
        if m.shape != (size, size):
            raise DimensionMismatchError(
                f"response on {self.n} qubits must be {size}x{size}, got {m.shape}"
            )
        if np.any(m < 0.0):
            raise ValidationError("response matrix entries must be nonnegative")
        sums = m.sum(axis=0)
        worst = float(np.max(np.abs(sums - 1.0)))
        if worst > COLUMN_SUM_TOL:
            raise ValidationError(
                f"response columns must sum to 1 within {COLUMN_SUM_TOL}, worst {worst:.3e}"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def size(self) -> int:
        return 1 << self.n


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """Length-2^n distribution over bitstrings.

    Flavors: ``prior`` (ground truth p), ``observed`` (noisy p'), and
    ``mitigated`` (approximate recovery p~).  Prior and observed vectors are
    genuine distributions.  Mitigated vectors may carry small negative
    entries and a normalization residual of the order of the truncation
    error, so they are only required to be finite.
    """

    n: int
    values: np.ndarray
    flavor: str = "prior"

    def __post_init__(self) -> None:
        check_qubit_count(self.n)
        if self.flavor not in _FLAVORS:
            raise ValidationError(f"unknown flavor {self.flavor!r}, expected one of {_FLAVORS}")
        v = _freeze(self.values)
        if v.shape != (1 << self.n,):
            raise DimensionMismatchError(
                f"vector on {self.n} qubits must have length {1 << self.n}, got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValidationError("probability vector entries must be finite")
        if self.flavor in ("prior", "observed"):
            if np.any(v < 0.0):
                raise ValidationError(f"{self.flavor} vector entries must be nonnegative")
            total = float(v.sum())
            if abs(total - 1.0) > VECTOR_SUM_TOL:
                raise ValidationError(
                    f"{self.flavor} vector must sum to 1 within {VECTOR_SUM_TOL}, got {total!r}"
                )
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class DenseMitigationResult:
    """Output of the brute-force dense inversion."""

    vector: ProbabilityVector
    condition: float
    used_lstsq: bool


def tensor_response(factors: Sequence[SingleQubitResponse]) -> ResponseMatrix:
    """Kronecker product of per-qubit factors; first factor acts on the most
    significant bit."""
    n = len(factors)
    check_qubit_count(n)
    matrix = functools.reduce(np.kron, [f.matrix for f in factors])
    return ResponseMatrix(n=n, matrix=matrix, provenance={"model": "tensor"})


def relaxation_only(n: int, q: float) -> ResponseMatrix:
    """Tensor power of the relaxation factor [[1, q], [0, 1-q]].

    Entrywise, R[i, j] = q^(w(j)-w(i)) (1-q)^(w(i)) when the set bits of i
    are a subset of those of j, and 0 otherwise; in weight order the matrix
    is upper triangular with nilpotent off-diagonal part.
    """
    check_qubit_count(n)
    factor = single_qubit_relaxation(q)
    matrix = functools.reduce(np.kron, [factor.matrix] * n)
    return ResponseMatrix(
        n=n, matrix=matrix, provenance={"model": "relaxation_only", "q": float(q)}
    )


def random_tensor(n: int, q: float, seed: int) -> ResponseMatrix:
    """Random tensor-structured response with per-qubit rates drawn from
    Uniform(0, q).

    Each qubit k gets an independent factor [[1-eta_k, eps_k],
    [eta_k, 1-eps_k]]; the generator is seeded so results are reproducible
    bit for bit.
    """
    check_qubit_count(n)
    if not 0.0 <= q <= 0.5:
        raise ValidationError(f"characteristic rate must satisfy 0 <= q <= 0.5, got {q}")
    rng = np.random.default_rng(seed)
    rates = rng.uniform(0.0, q, size=(n, 2))  # column 0: eps_k, column 1: eta_k
    factors = [single_qubit_flip(eps, eta) for eps, eta in rates]
    matrix = functools.reduce(np.kron, [f.matrix for f in factors])
    provenance = {
        "model": "random_tensor",
        "q": float(q),
        "seed": int(seed),
        "rates": [[float(eps), float(eta)] for eps, eta in rates],
    }
    return ResponseMatrix(n=n, matrix=matrix, provenance=provenance)


def _check_same_n(R: ResponseMatrix, p: ProbabilityVector) -> None:
    if R.n != p.n:
        raise DimensionMismatchError(
            f"response on {R.n} qubits cannot act on a {p.n}-qubit vector"
        )


def apply_response(R: ResponseMatrix, p: ProbabilityVector) -> ProbabilityVector:
    """Push a prior through the noise: p' = R p.

    Column stochasticity makes the output a valid observed distribution.
    """
    _check_same_n(R, p)
    if p.flavor != "prior":
        raise ValidationError(f"apply_response expects a prior vector, got {p.flavor!r}")
    return ProbabilityVector(n=R.n, values=R.matrix @ p.values, flavor="observed")


def dense_invert_mitigate(R: ResponseMatrix, p_obs: ProbabilityVector) -> DenseMitigationResult:
    """Brute-force mitigation: solve R p = p' densely.

    Uses a direct solve while the condition estimate stays below 1e12 and a
    least-squares solution beyond that; the result records which path ran.
    Every approximate method in this package is judged against this oracle.
    """
    _check_same_n(R, p_obs)
    if p_obs.flavor != "observed":
        raise ValidationError(
            f"dense_invert_mitigate expects an observed vector, got {p_obs.flavor!r}"
        )
    res = solve_with_condition(R.matrix, p_obs.values)
    vector = ProbabilityVector(n=R.n, values=res.x, flavor="mitigated")
    return DenseMitigationResult(
        vector=vector, condition=res.condition, used_lstsq=res.used_lstsq
    )


def estimate_rate(R: ResponseMatrix) -> float:
    """Largest single-flip transition probability of R.

    A heuristic stand-in for the characteristic rate q when only a measured
    matrix is available: the maximum of R[i, j] over pairs at XOR distance 1.
    """
    size = R.size
    cols = np.arange(size)
    best = 0.0
    for k in range(R.n):
        rows = cols ^ (1 << k)
        best = max(best, float(R.matrix[rows, cols].max()))
    return best


def save_matrix_json(R: ResponseMatrix, path: str | Path) -> None:
    """Write a response matrix as {"n", "order": "numeric", "data": rows}."""
    payload = {"n": R.n, "order": "numeric", "data": [list(map(float, row)) for row in R.matrix]}
    Path(path).write_text(json.dumps(payload))


def load_matrix_json(path: str | Path) -> ResponseMatrix:
    """Read and validate a response matrix written by :func:`save_matrix_json`."""
    payload = _load_json(path)
    _require_numeric_order(payload, path)
    return ResponseMatrix(n=int(payload["n"]), matrix=np.array(payload["data"], dtype=np.float64))


def save_vector_json(p: ProbabilityVector, path: str | Path) -> None:
    """Write a vector as {"n", "order": "numeric", "flavor", "data"}."""
    payload = {
        "n": p.n,
        "order": "numeric",
        "flavor": p.flavor,
        "data": list(map(float, p.values)),
    }
    Path(path).write_text(json.dumps(payload))


def load_vector_json(path: str | Path) -> ProbabilityVector:
    """Read and validate a vector written by :func:`save_vector_json`."""
    payload = _load_json(path)
    _require_numeric_order(payload, path)
    return ProbabilityVector(
        n=int(payload["n"]),
        values=np.array(payload["data"], dtype=np.float64),
        flavor=str(payload.get("flavor", "prior")),
    )


def _load_json(path: str | Path) -> dict:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ValidationError(f"expected a JSON object in {path}")
    for key in ("n", "data"):
        if key not in payload:
            raise ValidationError(f"missing key {key!r} in {path}")
    return payload


def _require_numeric_order(payload: dict, path: str | Path) -> None:
    order = payload.get("order", "numeric")
    if order != "numeric":
        raise ValidationError(f"unsupported index order {order!r} in {path}")
