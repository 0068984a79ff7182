"""Time-indexed operator families and causal space-time forward maps.

An OperatorFamily is a matrix-free family i -> A(t_i) of linear maps between
two weighted coordinate spaces.  A DynamicForward composes such a family
with an optional causal accumulation kernel into a map between space-time
functions, in one of three patterns:

  pointwise                y(t_i) = A(t_i) theta(t_i)
  observe_then_accumulate  y(t_i) = A(t_i) [sum_{j<=i} dt a(t_i-t_j) theta(t_j)]
  accumulate_then_observe  y(t_i) = sum_{j<=i} dt a(t_i-t_j) A(t_j) theta(t_j)

Adjoints are taken with respect to the weighted discrete inner products on
both sides; the adjoint of a causal sum is the matching anticausal sum.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .bochner import BochnerFunction, SpatialGrid, TimeGrid
from .errors import DimensionError, InvalidInputError, InvalidParameterError

POINTWISE = "pointwise"
OBSERVE_THEN_ACCUMULATE = "observe_then_accumulate"
ACCUMULATE_THEN_OBSERVE = "accumulate_then_observe"
KINDS = (POINTWISE, OBSERVE_THEN_ACCUMULATE, ACCUMULATE_THEN_OBSERVE)


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    """Matrix-free family of linear maps A(t_i): R^n_in -> R^n_out.

    apply(i, x) evaluates A(t_i) x; adjoint_apply(i, y) evaluates the adjoint
    with respect to the weighted inner products <x, x'> = in_weight * x.x'
    and <y, y'> = out_weight * y.y'.  norm_bound, when set, is a uniform
    bound on the operator norms sup_i ||A(t_i)||.
    """

    n_in: int
    n_out: int
    apply: Callable[[int, np.ndarray], np.ndarray]
    adjoint_apply: Callable[[int, np.ndarray], np.ndarray]
    in_weight: float = 1.0
    out_weight: float = 1.0
    norm_bound: Optional[float] = None

    def __post_init__(self) -> None:
        if self.n_in < 1 or self.n_out < 1:
            raise InvalidParameterError(
                f"dimensions must be positive, got n_in={self.n_in}, n_out={self.n_out}"
            )
        if not (self.in_weight > 0.0 and self.out_weight > 0.0):
            raise InvalidParameterError("space weights must be positive")
        if self.norm_bound is not None and not self.norm_bound >= 0.0:
            raise InvalidParameterError(f"norm bound must be >= 0, got {self.norm_bound}")


def identity_family(dim: int, weight: float = 1.0) -> OperatorFamily:
    """The identity on a dim-dimensional space, at every time index."""

    def apply(i: int, x: np.ndarray) -> np.ndarray:
        return np.array(x, dtype=float)

    return OperatorFamily(dim, dim, apply, apply, weight, weight, norm_bound=1.0)


def compose(outer: OperatorFamily, inner: OperatorFamily) -> OperatorFamily:
    """Pointwise composition i -> outer(t_i) inner(t_i)."""
    if inner.n_out != outer.n_in:
        raise DimensionError(
            f"cannot compose: inner produces {inner.n_out}, outer expects {outer.n_in}"
        )
    if inner.out_weight != outer.in_weight:
        raise DimensionError("cannot compose: intermediate space weights differ")

    def apply(i: int, x: np.ndarray) -> np.ndarray:
        return outer.apply(i, inner.apply(i, x))

    def adjoint_apply(i: int, y: np.ndarray) -> np.ndarray:
        return inner.adjoint_apply(i, outer.adjoint_apply(i, y))

    bound = None
    if inner.norm_bound is not None and outer.norm_bound is not None:
        bound = inner.norm_bound * outer.norm_bound
    return OperatorFamily(
        inner.n_in, outer.n_out, apply, adjoint_apply, inner.in_weight, outer.out_weight, bound
    )


def make_gaussian_smoothing(grid: SpatialGrid, sigma: float) -> OperatorFamily:
    """Time-constant Gaussian smoothing (K x)_i = sum_j dx exp(-(x_i-x_j)^2 / (2 sigma^2)) x_j.

    Self-adjoint in the dx-weighted inner product.  The kernel's fast
    singular-value decay makes it the smoothing (compact) building block
    of the benchmark problems.
    """
    if not sigma > 0.0:
        raise InvalidParameterError(f"kernel width must be positive, got {sigma}")
    x = grid.nodes
    kernel = grid.dx * np.exp(-((x[:, None] - x[None, :]) ** 2) / (2.0 * sigma * sigma))

    def apply(i: int, v: np.ndarray) -> np.ndarray:
        return kernel @ np.asarray(v, dtype=float)

    return OperatorFamily(grid.n_x, grid.n_x, apply, apply, grid.dx, grid.dx)


def make_subsample_observer(
    pattern: Sequence[Sequence[int]], dim: int, weight: float = 1.0
) -> OperatorFamily:
    """Observation masks: at time i only the components in pattern[i] survive.

    Each index set must be non-empty and within range.  The family is
    self-adjoint with operator norm exactly 1.
    """
    masks = np.zeros((len(pattern), dim))
    for i, idx in enumerate(pattern):
        idx = list(idx)
        if not idx:
            raise InvalidParameterError(f"empty observation set at time index {i}")
        if min(idx) < 0 or max(idx) >= dim:
            raise InvalidParameterError(
                f"observation indices at time {i} fall outside [0, {dim})"
            )
        masks[i, idx] = 1.0
    masks.setflags(write=False)

    def apply(i: int, v: np.ndarray) -> np.ndarray:
        return masks[i] * np.asarray(v, dtype=float)

    return OperatorFamily(dim, dim, apply, apply, weight, weight, norm_bound=1.0)


def rotating_window_pattern(n_t: int, dim: int, width: int) -> list[list[int]]:
    """Index sets of a width-`width` window sliding one slot per time step."""
    if not 1 <= width <= dim:
        raise InvalidParameterError(f"window width must lie in [1, {dim}], got {width}")
    return [sorted({(i + l) % dim for l in range(width)}) for i in range(n_t)]


def make_scaling_family(grid: TimeGrid, dim: int, weight: float = 1.0) -> OperatorFamily:
    """The family S(t_i) = (1 / t_i) I.

    Finite on the midpoint grid but with no uniform norm bound: the factor
    grows like 2 n_t / T at the first node under refinement, which is the
    package's stock example of non-uniform behavior.
    """
    nodes = grid.nodes

    def apply(i: int, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float) / nodes[i]

    return OperatorFamily(dim, dim, apply, apply, weight, weight, norm_bound=None)


def make_causal_kernel(grid: TimeGrid, samples) -> np.ndarray:
    """Validate accumulation-kernel samples a(k dt), k = 0..n_t-1.

    With a = (1/dt, 0, ..., 0) the causal sum reduces to the identity.
    """
    arr = np.array(samples, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != grid.n_t:
        raise DimensionError(
            f"need one kernel sample per time node ({grid.n_t}), got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("kernel samples contain non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DynamicForward:
    """A space-time forward map built from a family and an optional kernel.

    kind selects the composition pattern (see module docstring).  The two
    accumulation kinds require kernel samples on the grid's lags; the
    pointwise kind must not carry a kernel.  The exponent fields fix the
    Bochner geometry of source and data space.
    """

    kind: str
    static: OperatorFamily
    time_grid: TimeGrid
    kernel: Optional[np.ndarray] = None
    source_exponent: float = 2.0
    source_space_exponent: float = 2.0
    data_exponent: float = 2.0
    data_space_exponent: float = 2.0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown composition kind {self.kind!r}")
        if self.kind == POINTWISE:
            if self.kernel is not None:
                raise InvalidParameterError("pointwise composition takes no kernel")
        else:
            if self.kernel is None:
                raise InvalidParameterError(f"{self.kind} needs kernel samples")
            object.__setattr__(self, "kernel", make_causal_kernel(self.time_grid, self.kernel))

    @property
    def n_source(self) -> int:
        return self.static.n_in

    @property
    def n_data(self) -> int:
        return self.static.n_out

    def source_template(self, values) -> BochnerFunction:
        """Wrap raw source values in the forward map's source geometry."""
        return BochnerFunction(
            self.time_grid,
            values,
            self.source_exponent,
            self.source_space_exponent,
            self.static.in_weight,
        )

    def data_template(self, values) -> BochnerFunction:
        """Wrap raw data values in the forward map's data geometry."""
        return BochnerFunction(
            self.time_grid,
            values,
            self.data_exponent,
            self.data_space_exponent,
            self.static.out_weight,
        )


def _check_source(forward: DynamicForward, theta: BochnerFunction) -> None:
    if theta.grid != forward.time_grid:
        raise DimensionError("input lives on a different time grid than the forward map")
    if theta.n_dim != forward.static.n_in:
        raise DimensionError(
            f"input has {theta.n_dim} components, the family expects {forward.static.n_in}"
        )
    if theta.space_weight != forward.static.in_weight:
        raise DimensionError("input carries a different spatial weight than the source space")


def _check_data(forward: DynamicForward, y: BochnerFunction) -> None:
    if y.grid != forward.time_grid:
        raise DimensionError("data lives on a different time grid than the forward map")
    if y.n_dim != forward.static.n_out:
        raise DimensionError(
            f"data has {y.n_dim} components, the family produces {forward.static.n_out}"
        )
    if y.space_weight != forward.static.out_weight:
        raise DimensionError("data carries a different spatial weight than the data space")


def _causal_sum(kernel: np.ndarray, dt: float, rows: np.ndarray) -> np.ndarray:
    """y_i = sum_{j<=i} dt * kernel[i-j] * rows[j], ascending j per i (O(n_t^2))."""
    n_t, dim = rows.shape
    out = np.empty((n_t, dim))
    for i in range(n_t):
        acc = np.zeros(dim)
        for j in range(i + 1):
            acc += dt * kernel[i - j] * rows[j]
        out[i] = acc
    return out


def _anticausal_sum(kernel: np.ndarray, dt: float, rows: np.ndarray) -> np.ndarray:
    """Adjoint of _causal_sum: v_j = sum_{i>=j} dt * kernel[i-j] * rows[i]."""
    n_t, dim = rows.shape
    out = np.empty((n_t, dim))
    for j in range(n_t):
        acc = np.zeros(dim)
        for i in range(j, n_t):
            acc += dt * kernel[i - j] * rows[i]
        out[j] = acc
    return out


def apply_forward(forward: DynamicForward, theta: BochnerFunction) -> BochnerFunction:
    """Evaluate the forward map on a source function.

    The accumulation kinds touch only nodes j <= i when producing y(t_i),
    so perturbing the input at later nodes leaves earlier outputs
    bit-identical.
    """
    _check_source(forward, theta)
    fam = forward.static
    n_t = forward.time_grid.n_t
    dt = forward.time_grid.dt
    if forward.kind == POINTWISE:
        out = np.empty((n_t, fam.n_out))
        for i in range(n_t):
            out[i] = np.asarray(fam.apply(i, theta.values[i]), dtype=float)
    elif forward.kind == ACCUMULATE_THEN_OBSERVE:
        staged = np.empty((n_t, fam.n_out))
        for j in range(n_t):
            staged[j] = np.asarray(fam.apply(j, theta.values[j]), dtype=float)
        out = _causal_sum(forward.kernel, dt, staged)
    else:  # OBSERVE_THEN_ACCUMULATE
        accumulated = _causal_sum(forward.kernel, dt, theta.values)
        out = np.empty((n_t, fam.n_out))
        for i in range(n_t):
            out[i] = np.asarray(fam.apply(i, accumulated[i]), dtype=float)
    return forward.data_template(out)


def apply_adjoint(forward: DynamicForward, y: BochnerFunction) -> BochnerFunction:
    """Evaluate the adjoint of the forward map on a data function.

    Satisfies <apply_forward(F, theta), y> = <theta, apply_adjoint(F, y)>
    in the weighted space-time inner products; causal accumulation turns
    into anticausal accumulation.
    """
    _check_data(forward, y)
    fam = forward.static
    n_t = forward.time_grid.n_t
    dt = forward.time_grid.dt
    if forward.kind == POINTWISE:
        out = np.empty((n_t, fam.n_in))
        for i in range(n_t):
            out[i] = np.asarray(fam.adjoint_apply(i, y.values[i]), dtype=float)
    elif forward.kind == ACCUMULATE_THEN_OBSERVE:
        collected = _anticausal_sum(forward.kernel, dt, y.values)
        out = np.empty((n_t, fam.n_in))
        for j in range(n_t):
            out[j] = np.asarray(fam.adjoint_apply(j, collected[j]), dtype=float)
    else:  # OBSERVE_THEN_ACCUMULATE
        staged = np.empty((n_t, fam.n_in))
        for i in range(n_t):
            staged[i] = np.asarray(fam.adjoint_apply(i, y.values[i]), dtype=float)
        out = _anticausal_sum(forward.kernel, dt, staged)
    return forward.source_template(out)


def load_kernel_csv(path: str, grid: TimeGrid) -> np.ndarray:
    """Load kernel samples from CSV, one row per time index: `k,a`."""
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r]
    if rows and rows[0] and not rows[0][0].lstrip("-").replace(".", "", 1).isdigit():
        rows = rows[1:]  # optional header
    try:
        samples = [float(r[-1]) for r in rows]
    except (ValueError, IndexError) as exc:
        raise InvalidInputError(f"{path}: unparsable kernel row ({exc})") from exc
    return make_causal_kernel(grid, samples)


def load_pattern_csv(path: str, grid: TimeGrid) -> list[list[int]]:
    """Load observation index sets from CSV, one row of indices per time node."""
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r]
    if len(rows) != grid.n_t:
        raise DimensionError(f"{path}: need one pattern row per time node ({grid.n_t})")
    try:
        return [[int(x) for x in row if x.strip() != ""] for row in rows]
    except ValueError as exc:
        raise InvalidInputError(f"{path}: unparsable pattern row ({exc})") from exc


