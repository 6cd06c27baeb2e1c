"""Bitstring index arithmetic, weight-ordered enumeration and subspace selectors.

Indices label n-qubit computational basis states.  Bit k of an index value
is qubit k+1, with qubit 1 stored in the most significant position, so the
integer written in binary reads the same way as the measured bitstring.
Tensor products elsewhere in the package follow the same convention: the
first factor acts on the most significant bit.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, ValidationError

#: Dense 2^n arrays and matrices are refused beyond this qubit count.
MAX_QUBITS = 24


def check_qubit_count(n: int) -> int:
    if not 1 <= int(n) <= MAX_QUBITS:
        raise ValidationError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
    return int(n)


@dataclass(frozen=True)
class BitIndex:
    """A computational-basis label: an unsigned value on n qubits."""

    n: int
    value: int

    def __post_init__(self) -> None:
        check_qubit_count(self.n)
        if not 0 <= self.value < (1 << self.n):
            raise ValidationError(
                f"index {self.value} out of range for n={self.n}"
            )

    @property
    def weight(self) -> int:
        """Number of set bits."""
        return self.value.bit_count()

    def __xor__(self, other: "BitIndex") -> "BitIndex":
        if self.n != other.n:
            raise DimensionMismatchError(
                f"cannot combine indices on {self.n} and {other.n} qubits"
            )
        return BitIndex(self.n, self.value ^ other.value)

    def __index__(self) -> int:
        return self.value


def _as_value(x: BitIndex | int) -> int:
    return x.value if isinstance(x, BitIndex) else int(x)


def hamming_weight(x: BitIndex | int) -> int:
    """Number of 1 bits in the binary representation of ``x``."""
    value = _as_value(x)
    if value < 0:
        raise ValidationError(f"negative index {value}")
    return value.bit_count()


def xor_distance(x: BitIndex | int, y: BitIndex | int) -> int:
    """Number of bit positions at which ``x`` and ``y`` differ.

    Symmetric, zero exactly when the operands are equal.  When both operands
    carry a qubit count the counts must agree.
    """
    if isinstance(x, BitIndex) and isinstance(y, BitIndex) and x.n != y.n:
        raise DimensionMismatchError(
            f"cannot compare indices on {x.n} and {y.n} qubits"
        )
    return hamming_weight(_as_value(x) ^ _as_value(y))


def bit_weights(values: np.ndarray) -> np.ndarray:
    """Vectorized set-bit count of an array of nonnegative integers."""
    return np.bitwise_count(np.asarray(values, dtype=np.uint64)).astype(np.int64)


@functools.lru_cache(maxsize=32)
def index_weights(n: int) -> np.ndarray:
    """Weights of every index in [0, 2^n), cached and read-only."""
    check_qubit_count(n)
    weights = bit_weights(np.arange(1 << n, dtype=np.uint64))
    weights.setflags(write=False)
    return weights


@dataclass(frozen=True, eq=False)
class WeightOrderedSpace:
    """Permutation sorting [0, 2^n) by (weight ascending, value ascending).

    ``order[k]`` is the index value occupying sorted position k and
    ``inverse[v]`` is the sorted position of value v.  Ties inside one
    weight class are broken by ascending numeric value so every consumer
    sees the same layout.
    """

    n: int
    order: np.ndarray
    inverse: np.ndarray


@functools.lru_cache(maxsize=32)
def weight_ordered_space(n: int) -> WeightOrderedSpace:
    """Build (and cache) the weight ordering for ``n`` qubits."""
    check_qubit_count(n)
    values = np.arange(1 << n, dtype=np.int64)
    order = np.lexsort((values, index_weights(n)))
    inverse = np.empty_like(order)
    inverse[order] = values
    order.setflags(write=False)
    inverse.setflags(write=False)
    return WeightOrderedSpace(n=n, order=order, inverse=inverse)


@dataclass(frozen=True, eq=False)
class SubspaceSelector:
    """An XOR ball of indices: all values within ``radius`` bit flips of ``center``.

    ``members`` lists the selected values sorted by (weight, value), the
    restriction of the weight ordering to the ball.  With ``center == 0``
    the ball is the set of all indices of weight at most ``radius``.
    """

    n: int
    center: int
    radius: int
    members: np.ndarray

    @property
    def size(self) -> int:
        return int(self.members.size)


def subspace_size(n: int, w: int) -> int:
    """Number of n-bit strings of weight at most w: sum of C(n, k) for k <= w."""
    check_qubit_count(n)
    if not 0 <= w <= n:
        raise ValidationError(f"radius {w} out of range for n={n}")
    return sum(math.comb(n, k) for k in range(w + 1))


def weight_subspace(n: int, w: int) -> SubspaceSelector:
    """Selector for all indices of weight at most ``w``."""
    size = subspace_size(n, w)
    members = weight_ordered_space(n).order[:size].copy()
    members.setflags(write=False)
    return SubspaceSelector(n=n, center=0, radius=w, members=members)


def ball_subspace(n: int, center: BitIndex | int, w: int) -> SubspaceSelector:
    """Selector for all indices within XOR distance ``w`` of ``center``."""
    check_qubit_count(n)
    center = _as_value(center)
    if not 0 <= center < (1 << n):
        raise ValidationError(f"center {center} out of range for n={n}")
    if not 0 <= w <= n:
        raise ValidationError(f"radius {w} out of range for n={n}")
    base = weight_subspace(n, w).members
    shifted = base ^ center
    weights = index_weights(n)[shifted]
    members = shifted[np.lexsort((shifted, weights))]
    members.setflags(write=False)
    return SubspaceSelector(n=n, center=center, radius=w, members=members)


def _check_selector_dim(size: int, sel: SubspaceSelector) -> None:
    if size != 1 << sel.n:
        raise DimensionMismatchError(
            f"operand of size {size} does not match selector on {sel.n} qubits"
        )


def project_matrix(matrix: np.ndarray, sel: SubspaceSelector) -> np.ndarray:
    """Restrict a 2^n x 2^n matrix to the rows and columns in ``sel``.

    The result is |sel| x |sel| with rows and columns arranged in the
    selector's member order.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got {matrix.shape}")
    _check_selector_dim(matrix.shape[0], sel)
    return matrix[np.ix_(sel.members, sel.members)]


def project_vector(vector: np.ndarray, sel: SubspaceSelector) -> np.ndarray:
    """Restrict a length-2^n vector to the entries in ``sel``, member order."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.ndim != 1:
        raise DimensionMismatchError(f"expected a vector, got shape {vector.shape}")
    _check_selector_dim(vector.shape[0], sel)
    return vector[sel.members]
