"""Discretized Bochner spaces of time-dependent spatial vectors.

A function u in L^p(0, T; X) is stored by its values on a uniform midpoint
grid in time; each value is a vector on a uniform spatial grid carrying a
weighted discrete l^s norm.  The mixed norm uses midpoint quadrature,

    ||u|| = (sum_i dt * ||u(t_i)||_X^p)^(1/p),
    ||x||_X = (sum_j dx * |x_j|^s)^(1/s),

so time-constant functions are integrated exactly and every node stays
strictly inside (0, T).  All reductions run in ascending index order so
repeated evaluations are bit-identical.
"""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    InvalidInputError,
    InvalidParameterError,
    UnsupportedGeometryError,
)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform midpoint grid on [0, T] with nodes t_i = (i + 1/2) dt.

    The first node sits at dt/2 > 0, which keeps scaling families like
    1/t finite on the grid.
    """

    horizon: float
    n_t: int
    dt: float = None  # type: ignore[assignment]  # derived unless given by from_dt

    def __post_init__(self) -> None:
        if not np.isfinite(self.horizon) or self.horizon <= 0.0:
            raise InvalidParameterError(f"horizon must be positive, got {self.horizon}")
        if self.n_t < 1:
            raise InvalidParameterError(f"need at least one time node, got n_t={self.n_t}")
        if self.dt is None:
            object.__setattr__(self, "dt", self.horizon / self.n_t)

    @classmethod
    def from_dt(cls, dt: float, n_t: int) -> "TimeGrid":
        """Build a grid from its step; horizon becomes dt * n_t exactly."""
        return cls(dt * n_t, n_t, dt)

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.n_t) + 0.5) * self.dt


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform cell-midpoint grid on [a, b] with n_x cells of width dx."""

    a: float
    b: float
    n_x: int
    exponent: float = 2.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or self.a >= self.b:
            raise InvalidParameterError(f"need a < b, got [{self.a}, {self.b}]")
        if self.n_x < 1:
            raise InvalidParameterError(f"need at least one cell, got n_x={self.n_x}")
        if self.exponent < 1.0:
            raise InvalidParameterError(f"spatial exponent must be >= 1, got {self.exponent}")

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.n_x

    @property
    def nodes(self) -> np.ndarray:
        return self.a + (np.arange(self.n_x) + 0.5) * self.dx


class BochnerFunction:
    """Grid values of a space-time function together with its norm data.

    Parameters
    ----------
    grid : TimeGrid
        Time discretization; values[i] belongs to node grid.nodes[i].
    values : array_like, shape (n_t, n_dim)
        One spatial vector per time node.  Copied and frozen.
    p : float
        Time integrability exponent, p >= 1.
    space_exponent : float
        Exponent s of the discrete spatial norm, s >= 1.
    space_weight : float
        Quadrature weight of one spatial cell (dx for functions living on
        a SpatialGrid, 1.0 for bare coordinate vectors).
    """

    __slots__ = ("grid", "values", "p", "space_exponent", "space_weight")

    def __init__(
        self,
        grid: TimeGrid,
        values,
        p: float = 2.0,
        space_exponent: float = 2.0,
        space_weight: float = 1.0,
    ) -> None:
        arr = np.array(values, dtype=float)
        if arr.ndim != 2:
            raise DimensionError(f"values must be 2-d (n_t, n_dim), got shape {arr.shape}")
        if arr.shape[0] != grid.n_t:
            raise DimensionError(
                f"values have {arr.shape[0]} rows but the grid has {grid.n_t} nodes"
            )
        if arr.shape[1] < 1:
            raise DimensionError("values need at least one spatial component")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("values contain non-finite entries")
        if p < 1.0:
            raise InvalidParameterError(f"time exponent must be >= 1, got {p}")
        if space_exponent < 1.0:
            raise InvalidParameterError(f"space exponent must be >= 1, got {space_exponent}")
        if not space_weight > 0.0:
            raise InvalidParameterError(f"space weight must be positive, got {space_weight}")
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr
        self.p = float(p)
        self.space_exponent = float(space_exponent)
        self.space_weight = float(space_weight)

    @classmethod
    def from_grids(
        cls, grid: TimeGrid, space: SpatialGrid, values, p: float = 2.0
    ) -> "BochnerFunction":
        """Construct with spatial norm data taken from a SpatialGrid."""
        return cls(grid, values, p=p, space_exponent=space.exponent, space_weight=space.dx)

    @property
    def n_t(self) -> int:
        return self.values.shape[0]

    @property
    def n_dim(self) -> int:
        return self.values.shape[1]

    def with_values(self, values) -> "BochnerFunction":
        """Same geometry, new values."""
        return BochnerFunction(self.grid, values, self.p, self.space_exponent, self.space_weight)

    def node(self, i: int) -> np.ndarray:
        return self.values[i]

    def _require_same_geometry(self, other: "BochnerFunction") -> None:
        if self.grid != other.grid or self.n_dim != other.n_dim:
            raise DimensionError("functions live on different grids")
        if (
            self.p != other.p
            or self.space_exponent != other.space_exponent
            or self.space_weight != other.space_weight
        ):
            raise DimensionError("functions carry different norm data")

    def __add__(self, other: "BochnerFunction") -> "BochnerFunction":
        self._require_same_geometry(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "BochnerFunction") -> "BochnerFunction":
        self._require_same_geometry(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c: float) -> "BochnerFunction":
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"BochnerFunction(n_t={self.n_t}, n_dim={self.n_dim}, p={self.p}, "
            f"s={self.space_exponent}, weight={self.space_weight:g})"
        )


def spatial_norm(v: np.ndarray, weight: float, exponent: float) -> float:
    """Weighted discrete l^s norm of one spatial vector, ascending summation."""
    total = 0.0
    for x in v:
        total += weight * abs(x) ** exponent
    return total ** (1.0 / exponent)


def bochner_norm(u: BochnerFunction) -> float:
    """Mixed space-time norm (sum_i dt ||u(t_i)||_X^p)^(1/p).

    Summation runs in ascending index order in both time and space, so the
    value is bit-reproducible across runs.  Time-constant functions are
    integrated exactly: the result equals T^(1/p) * ||x||_X.
    """
    dt = u.grid.dt
    total = 0.0
    for i in range(u.n_t):
        total += dt * spatial_norm(u.values[i], u.space_weight, u.space_exponent) ** u.p
    return total ** (1.0 / u.p)


def bochner_inner(u: BochnerFunction, v: BochnerFunction) -> float:
    """L^2(0, T; X) inner product sum_i dt * sum_j w * u_ij * v_ij.

    Both arguments must carry Hilbert exponents (p = s = 2) and identical
    grids and weights.
    """
    u._require_same_geometry(v)
    if u.p != 2.0 or u.space_exponent != 2.0:
        raise UnsupportedGeometryError(
            f"inner product needs p = s = 2, got p={u.p}, s={u.space_exponent}"
        )
    dt = u.grid.dt
    w = u.space_weight
    total = 0.0
    for i in range(u.n_t):
        row_u = u.values[i]
        row_v = v.values[i]
        node = 0.0
        for j in range(u.n_dim):
            node += w * row_u[j] * row_v[j]
        total += dt * node
    return total


def holder_pairing(u: BochnerFunction, v: BochnerFunction) -> tuple[float, float]:
    """Dual pairing of u with v and its mixed-norm bound.

    Parameters
    ----------
    u, v : BochnerFunction
        Same grid and weight; exponents must be conjugate in time and in
        space (1/p + 1/p* = 1, 1/s + 1/s* = 1).

    Returns
    -------
    (pairing, bound)
        pairing = sum_i dt * sum_j w * v_ij * u_ij, and
        bound = ||u||_{p,s} * ||v||_{p*,s*}; |pairing| <= bound always.
    """
    if u.grid != v.grid or u.n_dim != v.n_dim or u.space_weight != v.space_weight:
        raise DimensionError("pairing needs matching grids and weights")
    if abs(1.0 / u.p + 1.0 / v.p - 1.0) > 1e-12:
        raise InvalidInputError(f"time exponents {u.p} and {v.p} are not conjugate")
    if abs(1.0 / u.space_exponent + 1.0 / v.space_exponent - 1.0) > 1e-12:
        raise InvalidInputError(
            f"space exponents {u.space_exponent} and {v.space_exponent} are not conjugate"
        )
    dt = u.grid.dt
    w = u.space_weight
    pairing = 0.0
    for i in range(u.n_t):
        row_u = u.values[i]
        row_v = v.values[i]
        node = 0.0
        for j in range(u.n_dim):
            node += w * row_v[j] * row_u[j]
        pairing += dt * node
    return pairing, bochner_norm(u) * bochner_norm(v)


def translate(u: BochnerFunction, z: float) -> BochnerFunction:
    """Time translation (tau_z u)(t) = u(t + z) on the surviving nodes.

    z is snapped to the nearest grid multiple k = round(z / dt); the result
    lives on the first n_t - k nodes.  translate(u, 0) returns an identical
    copy of u.
    """
    dt = u.grid.dt
    if not np.isfinite(z) or z < 0.0 or z >= u.grid.horizon:
        raise DomainError(f"shift must lie in [0, T), got {z}")
    k = int(round(z / dt))
    if k >= u.n_t:
        raise DomainError(f"shift {z} leaves no overlap on a grid with {u.n_t} nodes")
    if k == 0:
        return u.with_values(u.values)
    grid = TimeGrid.from_dt(dt, u.n_t - k)
    return BochnerFunction(grid, u.values[k:], u.p, u.space_exponent, u.space_weight)


def interpolate_tracked(
    snapshots,
    grid: TimeGrid,
    p: float = 2.0,
    space_exponent: float = 2.0,
    space_weight: float = 1.0,
) -> BochnerFunction:
    """Piecewise-constant interpolant of per-node snapshots.

    Takes exactly one spatial vector per grid node and returns the grid
    function holding them; its norm is bounded by T^(1/p) * max_k ||x_k||_X.
    """
    snaps = list(snapshots)
    if not snaps:
        raise InvalidInputError("no snapshots given")
    if len(snaps) != grid.n_t:
        raise DimensionError(f"got {len(snaps)} snapshots for a grid with {grid.n_t} nodes")
    arr = np.array(snaps, dtype=float)
    if arr.ndim != 2:
        raise DimensionError("snapshots must all be 1-d vectors of equal length")
    return BochnerFunction(grid, arr, p, space_exponent, space_weight)


def _atomic_write_text(path: str, text: str) -> None:
    """Write text via a temp file and rename, so readers never see partials."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(u: BochnerFunction, path: str) -> None:
    """Write u as CSV with header t,x_0,...,x_{n-1}, one row per time node.

    Floats are formatted with %.17g, which round-trips doubles exactly.
    The file is written atomically (temp file + rename).
    """
    lines = ["t," + ",".join(f"x_{j}" for j in range(u.n_dim))]
    nodes = u.grid.nodes
    for i in range(u.n_t):
        row = [f"{nodes[i]:.17g}"] + [f"{x:.17g}" for x in u.values[i]]
        lines.append(",".join(row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(
    path: str,
    p: float = 2.0,
    space_exponent: float = 2.0,
    space_weight: float = 1.0,
) -> BochnerFunction:
    """Read a BochnerFunction written by write_csv.

    The time grid is rebuilt from the first node (dt = 2 * t_0), which
    reproduces the written nodes bit-exactly, so read/write round-trips
    are byte-identical.  Norm data is not stored in the file and must be
    passed by the caller.
    """
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or not rows[0] or rows[0][0] != "t":
        raise InvalidInputError(f"{path}: missing t,x_0,... header")
    n_dim = len(rows[0]) - 1
    if n_dim < 1 or rows[0][1:] != [f"x_{j}" for j in range(n_dim)]:
        raise InvalidInputError(f"{path}: malformed header {rows[0]}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise InvalidInputError(f"{path}: no data rows")
    try:
        t = np.array([float(r[0]) for r in body])
        vals = np.array([[float(x) for x in r[1:]] for r in body])
    except (ValueError, IndexError) as exc:
        raise InvalidInputError(f"{path}: unparsable row ({exc})") from exc
    if vals.shape[1] != n_dim:
        raise InvalidInputError(f"{path}: ragged rows")
    if t[0] <= 0.0:
        raise InvalidInputError(f"{path}: first node must be positive, got {t[0]}")
    grid = TimeGrid.from_dt(2.0 * t[0], len(body))
    if not np.allclose(grid.nodes, t, rtol=1e-9, atol=0.0):
        raise InvalidInputError(f"{path}: time column is not a uniform midpoint grid")
    return BochnerFunction(grid, vals, p, space_exponent, space_weight)
