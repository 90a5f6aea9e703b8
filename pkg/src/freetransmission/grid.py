"""Uniform Cartesian sampling of the unit ball and finite-difference stencils.

The ball B_1 is embedded in the cube [-1, 1]^d. Nodes with |x| < 1 - margin*h
are *interior*; every interior node has all of its stencil neighbours (including
the diagonal ones used for mixed derivatives) inside the cube. Derivative arrays
are NaN on the outermost ring of the cube, where no centred stencil exists.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    d: int
    n: int
    margin: float = 1.0
    h: float = field(init=False)

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3 (got {self.d})")
        if self.n < 5 or self.n % 2 == 0:
            raise ValueError(f"n must be odd ≥ 5 (got {self.n})")
        if self.margin < 1.0:
            raise ValueError("margin must be at least one node")
        object.__setattr__(self, "h", 2.0 / (self.n - 1))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def axis(self) -> np.ndarray:
        # exact symmetric nodes: index i maps to -1 + i*h, origin at (n-1)/2
        return (np.arange(self.n) - (self.n - 1) // 2) * self.h

    @property
    def origin_index(self) -> tuple[int, ...]:
        return ((self.n - 1) // 2,) * self.d

    def coords(self) -> np.ndarray:
        """Node coordinates, shape (d, n, ..., n)."""
        return self._coords

    @cached_property
    def _coords(self) -> np.ndarray:
        c = np.stack(np.meshgrid(*([self.axis] * self.d), indexing="ij"))
        c.setflags(write=False)
        return c

    def radius(self) -> np.ndarray:
        return self._radius

    @cached_property
    def _radius(self) -> np.ndarray:
        r = np.sqrt(np.sum(self._coords**2, axis=0))
        r.setflags(write=False)
        return r

    @cached_property
    def mask(self) -> np.ndarray:
        m = self._radius < 1.0 - self.margin * self.h
        m.setflags(write=False)
        return m

    def boundary_layer(self) -> np.ndarray:
        """Non-interior nodes adjacent (in the 3^d sense) to an interior node."""
        m = self.mask
        grown = m.copy()
        for offset in np.ndindex(*([3] * self.d)):
            shift = tuple(o - 1 for o in offset)
            grown |= np.roll(m, shift, axis=tuple(range(self.d)))
        return grown & ~m

    def index_of(self, x) -> tuple[int, ...]:
        """Index of the node nearest to the point x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.rint(x / self.h).astype(int) + (self.n - 1) // 2
        return tuple(int(np.clip(i, 0, self.n - 1)) for i in idx)

    def ball(self, x0, r: float, interior_only: bool = True) -> np.ndarray:
        """Boolean mask of nodes in the closed ball B_r(x0)."""
        x0 = np.asarray(x0, dtype=float).reshape((self.d,) + (1,) * self.d)
        dist = np.sqrt(np.sum((self.coords() - x0) ** 2, axis=0))
        sel = dist <= r * (1 + 1e-12) + 1e-14
        return sel & self.mask if interior_only else sel


def make_grid(d: int = 2, n: int = 129, margin: float = 1.0) -> GridSpec:
    return GridSpec(d=d, n=n, margin=margin)


@dataclass(frozen=True)
class ScalarField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v[self.grid.mask])):
            raise ValueError("field values must be finite at interior nodes")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable[[np.ndarray], np.ndarray]) -> "ScalarField":
        """Sample fn, which receives the (d, n, ..., n) coordinate array."""
        return cls(grid, np.broadcast_to(fn(grid.coords()), grid.shape))

    def sup(self, region: np.ndarray | None = None) -> float:
        region = self.grid.mask if region is None else region
        if not region.any():
            return 0.0
        return float(np.max(np.abs(self.values[region])))

    def __add__(self, other):
        if isinstance(other, ScalarField):
            other = other.values
        return ScalarField(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            other = other.values
        return ScalarField(self.grid, self.values - other)

    def __mul__(self, s):
        return ScalarField(self.grid, self.values * s)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    # serialization

    def to_json(self) -> str:
        g = self.grid
        return json.dumps({"d": g.d, "n": g.n, "values": [float(v) for v in self.values.ravel()]})

    @classmethod
    def from_json(cls, text: str) -> "ScalarField":
        data = json.loads(text)
        grid = make_grid(int(data["d"]), int(data["n"]))
        return cls(grid, np.asarray(data["values"], dtype=float).reshape(grid.shape))

    def to_csv(self) -> str:
        """One row per grid line (the last axis varies along a row)."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for row in self.values.reshape(-1, self.grid.n):
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, d: int) -> "ScalarField":
        rows = [list(map(float, r)) for r in csv.reader(io.StringIO(text)) if r]
        n = len(rows[0])
        grid = make_grid(d, n)
        return cls(grid, np.asarray(rows, dtype=float).reshape(grid.shape))


def _shift(a: np.ndarray, axis: int, step: int) -> np.ndarray:
    """a evaluated at the neighbour index + step along axis, NaN where absent."""
    out = np.full_like(a, np.nan, dtype=float)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if step > 0:
        src[axis] = slice(step, None)
        dst[axis] = slice(None, -step)
    else:
        src[axis] = slice(None, step)
        dst[axis] = slice(-step, None)
    out[tuple(dst)] = a[tuple(src)]
    return out


def _values(u) -> tuple[np.ndarray, float]:
    if isinstance(u, ScalarField):
        return u.values, u.grid.h
    raise TypeError("expected a ScalarField")


def gradient(u: ScalarField) -> np.ndarray:
    """Central-difference gradient, shape (d, n, ..., n)."""
    v, h = _values(u)
    d = v.ndim
    return np.stack([(_shift(v, j, 1) - _shift(v, j, -1)) / (2 * h) for j in range(d)])


def one_sided_differences(u: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Forward and backward differences, each of shape (d, n, ..., n)."""
    v, h = _values(u)
    fwd = np.stack([(_shift(v, j, 1) - v) / h for j in range(v.ndim)])
    bwd = np.stack([(v - _shift(v, j, -1)) / h for j in range(v.ndim)])
    return fwd, bwd


def hessian(u: ScalarField) -> np.ndarray:
    """Second differences, shape (d, d, n, ..., n); cross terms from the four-corner stencil."""
    v, h = _values(u)
    d = v.ndim
    out = np.empty((d, d) + v.shape)
    for i in range(d):
        out[i, i] = (_shift(v, i, 1) - 2 * v + _shift(v, i, -1)) / h**2
        for j in range(i + 1, d):
            pp = _shift(_shift(v, i, 1), j, 1)
            mm = _shift(_shift(v, i, -1), j, -1)
            pm = _shift(_shift(v, i, 1), j, -1)
            mp = _shift(_shift(v, i, -1), j, 1)
            out[i, j] = out[j, i] = (pp + mm - pm - mp) / (4 * h**2)
    return out


def as_matrix_field(H: np.ndarray) -> np.ndarray:
    """Move the (d, d) axes of a Hessian array to the end: (..., d, d)."""
    return np.moveaxis(np.moveaxis(H, 0, -1), 0, -1)


def as_vector_field(g: np.ndarray) -> np.ndarray:
    return np.moveaxis(g, 0, -1)
