"""Matrix primitives and the flow types shared by the rest of the package.

Dense matrices are plain ``numpy.ndarray`` objects of dtype float64.  Edge
flows (alternating functions on the edges of the complete graph) and
triangle flows get thin wrappers so that their symmetry is guaranteed by
construction instead of merely checked.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DimensionError(ValueError):
    pass


class CsvFormatError(ValueError):
    """Malformed matrix CSV; ``row`` and ``column`` are 1-based."""

    def __init__(self, message: str, row: int, column: int | None = None):
        where = f"row {row}" if column is None else f"row {row}, column {column}"
        super().__init__(f"{where}: {message}")
        self.row = row
        self.column = column


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def as_square(a, name: str = "matrix") -> np.ndarray:
    a = as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def hadamard(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b


def matrix_power(a, k: int) -> np.ndarray:
    """``a`` multiplied by itself ``k`` times, by binary exponentiation."""
    a = as_square(a)
    if k < 0:
        raise ValueError("k must be nonnegative")
    result = None
    base = a
    while k:
        if k & 1:
            result = base.copy() if result is None else result @ base
        k >>= 1
        if k:
            base = base @ base
    if result is None:
        return np.eye(a.shape[0])
    return result


def frobenius(a) -> float:
    return float(np.sqrt(np.sum(np.square(a))))


def skew_part(m) -> np.ndarray:
    """``(m - m.T) / 2`` with each pair computed once, so the result is exactly skew."""
    m = as_square(m)
    upper = np.triu(0.5 * (m - m.T), 1)
    return upper - upper.T


class EdgeFlow:
    """Alternating function on the edges of the complete graph on ``dim`` vertices.

    Only the strict upper triangle is stored; the matrix view mirrors it with a
    sign flip, so ``flow[i, j] == -flow[j, i]`` holds bit for bit.
    """

    __slots__ = ("_upper", "_matrix")

    def __init__(self, upper):
        upper = as_square(upper, "upper")
        self._upper = np.triu(upper, 1)
        m = self._upper - self._upper.T
        m.flags.writeable = False
        self._matrix = m

    @classmethod
    def from_matrix(cls, m) -> "EdgeFlow":
        """Skew part of an arbitrary square matrix."""
        m = as_square(m)
        return cls(0.5 * (m - m.T))

    @classmethod
    def from_skew(cls, m, atol: float = 0.0) -> "EdgeFlow":
        """Wrap a matrix that is already skew-symmetric (within ``atol``)."""
        m = as_square(m)
        if np.max(np.abs(m + m.T), initial=0.0) > atol:
            raise ValueError("matrix is not skew-symmetric")
        return cls(m)

    @classmethod
    def zeros(cls, dim: int) -> "EdgeFlow":
        return cls(np.zeros((dim, dim)))

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def __array__(self, dtype=None, copy=None):
        return self._matrix if dtype is None else self._matrix.astype(dtype)

    def __getitem__(self, idx):
        return self._matrix[idx]

    def __add__(self, other: "EdgeFlow") -> "EdgeFlow":
        return EdgeFlow(self._upper + other._upper)

    def __sub__(self, other: "EdgeFlow") -> "EdgeFlow":
        return EdgeFlow(self._upper - other._upper)

    def __mul__(self, c: float) -> "EdgeFlow":
        return EdgeFlow(self._upper * c)

    __rmul__ = __mul__

    def inner(self, other: "EdgeFlow") -> float:
        """Sum over all ordered pairs of the entrywise product."""
        return float(np.sum(self._matrix * other._matrix))

    def norm2(self) -> float:
        return self.inner(self)

    def __repr__(self):
        return f"EdgeFlow(dim={self.dim})"


class TriangleFlow:
    """Alternating function on ordered vertex triples, stored densely.

    Built from arbitrary values on the strictly increasing triples ``i<j<k``;
    all other entries follow by antisymmetry.  Dense storage is meant for
    small graphs only.
    """

    MAX_DIM = 32

    def __init__(self, dim: int, values: dict[tuple[int, int, int], float] | None = None):
        if dim > self.MAX_DIM:
            raise ValueError(f"dense triangle flows limited to dim <= {self.MAX_DIM}")
        t = np.zeros((dim, dim, dim))
        for (i, j, k), v in (values or {}).items():
            if len({i, j, k}) < 3:
                raise ValueError("triangle indices must be distinct")
            sign = _perm_sign((i, j, k))
            i, j, k = sorted((i, j, k))
            v = sign * v
            for (a, b, c), s in _PERMS:
                t[(i, j, k)[a], (i, j, k)[b], (i, j, k)[c]] += s * v
        t.flags.writeable = False
        self.values = t

    @classmethod
    def random(cls, dim: int, rng) -> "TriangleFlow":
        triples = [(i, j, k) for i in range(dim) for j in range(i + 1, dim) for k in range(j + 1, dim)]
        draws = rng.uniform(-1.0, 1.0, len(triples))
        return cls(dim, dict(zip(triples, draws)))

    @property
    def dim(self) -> int:
        return self.values.shape[0]


_PERMS = [((0, 1, 2), 1), ((1, 0, 2), -1), ((0, 2, 1), -1), ((2, 1, 0), -1), ((1, 2, 0), 1), ((2, 0, 1), 1)]


def _perm_sign(idx) -> int:
    inversions = sum(1 for a in range(3) for b in range(a + 1, 3) if idx[a] > idx[b])
    return -1 if inversions % 2 else 1


@dataclass(frozen=True)
class DagParams:
    """Skew weight matrix ``w`` and vertex potential ``p``."""

    w: EdgeFlow
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or p.shape[0] != self.w.dim:
            raise DimensionError(f"potential length {p.shape} does not match dim {self.w.dim}")
        if not np.all(np.isfinite(p)):
            raise ValueError("potential has non-finite entries")
        object.__setattr__(self, "p", p)


def write_matrix_csv(a, path) -> None:
    Path(path).write_text(format_matrix_csv(a))


def format_matrix_csv(a) -> str:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    # repr gives the shortest string that round-trips exactly
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in a)


def read_matrix_csv(path) -> np.ndarray:
    return parse_matrix_csv(Path(path).read_text())


def parse_matrix_csv(text: str) -> np.ndarray:
    rows = []
    width = None
    for r, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise CsvFormatError(f"expected {width} columns, found {len(row)}", r)
        vals = []
        for c, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise CsvFormatError(f"cannot parse {cell!r} as a number", r, c) from None
            if not np.isfinite(v):
                raise CsvFormatError(f"non-finite value {cell!r}", r, c)
            vals.append(v)
        rows.append(vals)
    if not rows:
        raise CsvFormatError("empty matrix", 1)
    return np.array(rows, dtype=float)
