"""Hamming-weight band decomposition of a response matrix.

The entries of R are partitioned by the XOR distance between their row and
column indices: band j collects exactly the order-j bitflip transitions.
Band 0 is the diagonal.  Bands are kept in coordinate (triplet) form; they
are built once and streamed through matrix-vector products, never factored,
so the simple format wins over compressed layouts.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .bitspace import bit_weights, check_qubit_count, index_weights
from .errors import (
    DecompositionError,
    DimensionMismatchError,
    SingularMatrixError,
    ValidationError,
)
from .response import ResponseMatrix


def band_nnz_bound(n: int, j: int) -> int:
    """Maximum nonzero count of band j: 2^n * C(n, j)."""
    check_qubit_count(n)
    if not 0 <= j <= n:
        raise ValidationError(f"band index {j} out of range for n={n}")
    return (1 << n) * math.comb(n, j)


def sparsity(n: int, j: int) -> float:
    """Fraction of matrix entries living in band j: 2^-n * C(n, j)."""
    return band_nnz_bound(n, j) / float((1 << n) ** 2)


@dataclass(frozen=True, eq=False)
class WeightBand:
    """Coordinate-format storage of one XOR-distance band."""

    n: int
    j: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        check_qubit_count(self.n)
        size = 1 << self.n
        if not 0 <= self.j <= self.n:
            raise ValidationError(f"band index {self.j} out of range for n={self.n}")
        rows = np.asarray(self.rows, dtype=np.int64).copy()
        cols = np.asarray(self.cols, dtype=np.int64).copy()
        values = np.asarray(self.values, dtype=np.float64).copy()
        if not (rows.ndim == cols.ndim == values.ndim == 1):
            raise ValidationError("band triplets must be one-dimensional arrays")
        if not (rows.size == cols.size == values.size):
            raise ValidationError("band triplet arrays must share one length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= size or cols.min() < 0 or cols.max() >= size:
                raise ValidationError(f"band coordinates out of range for n={self.n}")
            if np.any(bit_weights(rows ^ cols) != self.j):
                raise ValidationError(
                    f"band {self.j} contains entries at a different XOR distance"
                )
            flat = rows * size + cols
            if np.unique(flat).size != flat.size:
                raise ValidationError(f"band {self.j} contains duplicate coordinates")
        if not np.all(np.isfinite(values)):
            raise ValidationError(f"band {self.j} contains non-finite values")
        if rows.size > band_nnz_bound(self.n, self.j):
            raise ValidationError(f"band {self.j} exceeds its nonzero bound")
        for name, arr in (("rows", rows), ("cols", cols), ("values", values)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def nnz(self) -> int:
        return int(self.rows.size)


@dataclass(frozen=True, eq=False)
class BandDecomposition:
    """Bands j = 0 .. w_max of one response matrix.

    Band 0 must cover the whole diagonal with strictly positive entries;
    that diagonal is the invertible zeroth-order term every series method
    divides by.
    """

    n: int
    w_max: int
    bands: tuple

    def __post_init__(self) -> None:
        check_qubit_count(self.n)
        if not 0 <= self.w_max <= self.n:
            raise ValidationError(f"w_max {self.w_max} out of range for n={self.n}")
        bands = tuple(self.bands)
        if len(bands) != self.w_max + 1:
            raise ValidationError(
                f"expected {self.w_max + 1} bands for w_max={self.w_max}, got {len(bands)}"
            )
        for j, band in enumerate(bands):
            if not isinstance(band, WeightBand):
                raise ValidationError(f"band {j} is not a WeightBand")
            if band.n != self.n:
                raise DimensionMismatchError(
                    f"band {j} is on {band.n} qubits, decomposition on {self.n}"
                )
            if band.j != j:
                raise ValidationError(f"band at position {j} is labeled {band.j}")
        zero = bands[0]
        size = 1 << self.n
        if zero.nnz != size or np.any(zero.rows != zero.cols):
            raise ValidationError("band 0 must hold the full diagonal")
        if np.any(zero.values <= 0.0):
            raise ValidationError("band 0 diagonal entries must be strictly positive")
        object.__setattr__(self, "bands", bands)

    @property
    def size(self) -> int:
        return 1 << self.n

    @functools.cached_property
    def diagonal(self) -> np.ndarray:
        """Band-0 diagonal as a dense vector in numeric index order."""
        diag = np.zeros(self.size)
        diag[self.bands[0].rows] = self.bands[0].values
        diag.setflags(write=False)
        return diag


def decompose(R: ResponseMatrix, w_max: int) -> BandDecomposition:
    """Split R into XOR-distance bands 0 .. w_max.

    Every entry lands in exactly one band; entries at distance greater than
    w_max are discarded and exact zeros are not stored.  A nonpositive
    diagonal entry is refused because the zeroth-order term would not be
    invertible.
    """
    if not 0 <= w_max <= R.n:
        raise ValidationError(f"w_max {w_max} out of range for n={R.n}")
    diag = np.diagonal(R.matrix)
    if np.any(diag <= 0.0):
        raise DecompositionError(
            "response diagonal has a nonpositive entry; the zeroth-order band is singular"
        )
    size = R.size
    every = np.arange(size, dtype=np.int64)
    weights = index_weights(R.n)
    bands = []
    for j in range(w_max + 1):
        parts_r, parts_c, parts_v = [], [], []
        for mask in every[weights == j]:
            rows = every ^ mask
            vals = R.matrix[rows, every]
            keep = vals != 0.0
            parts_r.append(rows[keep])
            parts_c.append(every[keep])
            parts_v.append(vals[keep])
        rows = np.concatenate(parts_r)
        cols = np.concatenate(parts_c)
        vals = np.concatenate(parts_v)
        order = np.lexsort((cols, rows))
        bands.append(WeightBand(n=R.n, j=j, rows=rows[order], cols=cols[order], values=vals[order]))
    return BandDecomposition(n=R.n, w_max=w_max, bands=tuple(bands))


def _check_band_order(bands: BandDecomposition, w: int) -> None:
    if not 0 <= w <= bands.w_max:
        raise ValidationError(
            f"order {w} exceeds the retained bands (w_max={bands.w_max})"
        )


def reassemble(bands: BandDecomposition, w: int) -> np.ndarray:
    """Dense sum of bands 0 .. w."""
    _check_band_order(bands, w)
    size = bands.size
    out = np.zeros((size, size))
    for band in bands.bands[: w + 1]:
        out[band.rows, band.cols] = band.values
    return out


def _matvec_range(bands: BandDecomposition, lo: int, hi: int, v: np.ndarray) -> np.ndarray:
    size = bands.size
    out = np.zeros(size)
    for band in bands.bands[lo : hi + 1]:
        if band.nnz:
            out += np.bincount(band.rows, weights=band.values * v[band.cols], minlength=size)
    return out


def band_matvec(bands: BandDecomposition, w: int, v: np.ndarray) -> np.ndarray:
    """Sparse product (sum of bands 0 .. w) @ v, never densified."""
    _check_band_order(bands, w)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (bands.size,):
        raise DimensionMismatchError(
            f"vector of shape {v.shape} does not match {bands.size} basis states"
        )
    return _matvec_range(bands, 0, w, v)


def apply_diagonal_inverse(bands: BandDecomposition, v: np.ndarray) -> np.ndarray:
    """Elementwise division by the band-0 diagonal (the R_0^{-1} step)."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (bands.size,):
        raise DimensionMismatchError(
            f"vector of shape {v.shape} does not match {bands.size} basis states"
        )
    diag = bands.diagonal
    if np.any(diag == 0.0):
        raise SingularMatrixError("zeroth-order diagonal contains a zero entry")
    return v / diag


def save_band_json(band: WeightBand, path: str | Path) -> None:
    """Write one band as {"n", "j", "entries": [[row, col, value], ...]}."""
    payload = {
        "n": band.n,
        "j": band.j,
        "entries": [
            [int(r), int(c), float(x)] for r, c, x in zip(band.rows, band.cols, band.values)
        ],
    }
    Path(path).write_text(json.dumps(payload))


def load_band_json(path: str | Path) -> WeightBand:
    """Read and validate a band written by :func:`save_band_json`."""
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON in {path}: {exc}") from exc
    for key in ("n", "j", "entries"):
        if key not in payload:
            raise ValidationError(f"missing key {key!r} in {path}")
    entries = payload["entries"]
    rows = np.array([e[0] for e in entries], dtype=np.int64)
    cols = np.array([e[1] for e in entries], dtype=np.int64)
    values = np.array([e[2] for e in entries], dtype=np.float64)
    return WeightBand(n=int(payload["n"]), j=int(payload["j"]), rows=rows, cols=cols, values=values)


def decomposition_from_bands(bands: Sequence[WeightBand]) -> BandDecomposition:
    """Assemble loaded bands (ordered j = 0 .. w_max) into a decomposition."""
    if not bands:
        raise ValidationError("at least the zeroth band is required")
    return BandDecomposition(n=bands[0].n, w_max=len(bands) - 1, bands=tuple(bands))
