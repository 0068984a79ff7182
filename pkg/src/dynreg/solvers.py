"""Regularization methods: tracking Tikhonov, uniform Tikhonov, Kaczmarz loops.

All methods assume the Hilbert geometry (p = s = 2).  The two Tikhonov
solvers run conjugate gradients on their normal equations, matrix-free;
the Kaczmarz iterations cycle through user-supplied linear sub-problems
and stop by the adapted discrepancy principle: at a sweep boundary once
every residual seen during the last full cycle fell below tau_i * delta_i.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .bochner import BochnerFunction, bochner_norm, interpolate_tracked
from .errors import (
    DimensionError,
    DivergenceError,
    InvalidInputError,
    InvalidParameterError,
    UnsupportedGeometryError,
    UnsupportedKindError,
)
from .operators import (
    ACCUMULATE_THEN_OBSERVE,
    DynamicForward,
    POINTWISE,
    _check_data,
    apply_adjoint,
    apply_forward,
)


@dataclass(frozen=True)
class TikhonovConfig:
    """Numerics of the normal-equation CG: relative tolerance and iteration cap."""

    tol: float = 1e-10
    max_iter: int = 5000

    def __post_init__(self) -> None:
        if not 0.0 < self.tol < 1.0:
            raise InvalidParameterError(f"tolerance must lie in (0, 1), got {self.tol}")
        if self.max_iter < 1:
            raise InvalidParameterError(f"need max_iter >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class ParameterRule:
    """A-priori choice alpha(delta) = scale * delta^exponent.

    The exponent must lie strictly between 0 and residual_power (the power
    of the data-fit term, 2 here), which is exactly the regime where
    alpha(delta) -> 0 and delta^residual_power / alpha(delta) -> 0.
    """

    scale: float
    exponent: float
    kind: str = "a_priori"
    residual_power: float = 2.0

    def __post_init__(self) -> None:
        if self.kind != "a_priori":
            raise InvalidParameterError(f"unknown rule kind {self.kind!r}")
        if not self.scale > 0.0:
            raise InvalidParameterError(f"rule scale must be positive, got {self.scale}")
        if not 0.0 < self.exponent < self.residual_power:
            raise InvalidParameterError(
                f"rule exponent must lie in (0, {self.residual_power}), got {self.exponent}"
            )


def choose_alpha(rule: ParameterRule, delta: float) -> float:
    """Evaluate an a-priori rule at noise level delta."""
    if not delta > 0.0:
        raise InvalidParameterError(f"noise level must be positive, got {delta}")
    return rule.scale * delta**rule.exponent


@dataclass(frozen=True)
class KaczmarzConfig:
    """Cycling iteration parameters.

    omega is the step size, either a positive real or "auto" (per
    sub-problem power-iteration estimate, omega_i = 0.9 / ||F_i||^2, which
    keeps the per-sub-problem residual monotone in its own step).  tau are
    the discrepancy factors (scalar or one per sub-problem, each >= 1).
    memory is the number of remembered iterates for the multi-direction
    variant; memory = 1 is plain optimal-step Landweber-Kaczmarz.
    """

    omega: Union[float, str] = "auto"
    tau: Union[float, Sequence[float]] = 2.0
    max_sweeps: int = 500
    memory: int = 1
    power_iterations: int = 30
    power_seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.omega, str):
            if self.omega != "auto":
                raise InvalidParameterError(f"omega must be positive or 'auto', got {self.omega!r}")
        elif not self.omega > 0.0:
            raise InvalidParameterError(f"omega must be positive, got {self.omega}")
        taus = [self.tau] if np.isscalar(self.tau) else list(self.tau)
        if any(not t >= 1.0 for t in taus):
            raise InvalidParameterError(f"discrepancy factors must be >= 1, got {self.tau}")
        if self.max_sweeps < 0:
            raise InvalidParameterError(f"max_sweeps must be >= 0, got {self.max_sweeps}")
        if self.memory < 1:
            raise InvalidParameterError(f"memory must be >= 1, got {self.memory}")
        if self.power_iterations < 1:
            raise InvalidParameterError("power_iterations must be >= 1")


@dataclass(frozen=True, eq=False)
class LinearSubproblem:
    """One equation F_i x = y_i of a cyclic system.

    apply/adjoint evaluate F_i and its adjoint with respect to the weighted
    inner products (data_weight on the data side, unknown_weight on the
    unknown side).  noise_level is this sub-problem's share delta_i of the
    noise budget.
    """

    apply: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    data: np.ndarray
    noise_level: float
    data_weight: float = 1.0
    unknown_weight: float = 1.0

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=float)
        if data.ndim != 1:
            raise DimensionError(f"sub-problem data must be a vector, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("sub-problem data contains non-finite entries")
        if not self.noise_level >= 0.0:
            raise InvalidParameterError(f"noise level must be >= 0, got {self.noise_level}")
        if not (self.data_weight > 0.0 and self.unknown_weight > 0.0):
            raise InvalidParameterError("weights must be positive")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def residual(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.apply(x), dtype=float) - self.data

    def residual_norm(self, r: np.ndarray) -> float:
        return math.sqrt(self.data_weight * float(r @ r))


@dataclass
class SolveReport:
    """Outcome of one solver run.

    reconstruction is a BochnerFunction for the space-time solvers and a
    single spatial vector for the static-source Kaczmarz loops.  trace rows
    are (iteration, subproblem, residual, alpha, error) with NaN for fields
    a method does not produce; residuals/alphas repeat the trace columns
    for quick access.  error is the relative distance to the supplied
    truth, when given.
    """

    reconstruction: Union[BochnerFunction, np.ndarray]
    residuals: list[float]
    alphas: list[float]
    stop_reason: str
    iterations: int
    error: Optional[float]
    wall_time: float
    trace: list[tuple[int, int, float, float, float]]


def _cg(
    operator: Callable[[np.ndarray], np.ndarray],
    rhs: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, int, bool, list[float]]:
    """Conjugate gradients for an SPD map, matrix-free.

    Returns (solution, iterations, converged, relative residual history).
    The relative residual is measured against ||rhs||; a zero rhs returns
    the zero solution immediately.
    """
    x = np.zeros_like(rhs)
    r = rhs.copy()
    rhs_norm = math.sqrt(float(r.ravel() @ r.ravel()))
    if rhs_norm == 0.0:
        return x, 0, True, [0.0]
    p = r.copy()
    rs = float(r.ravel() @ r.ravel())
    history: list[float] = []
    for k in range(1, max_iter + 1):
        Ap = operator(p)
        pAp = float(p.ravel() @ Ap.ravel())
        if pAp <= 0.0:
            return x, k - 1, False, history  # lost positivity: bail out, caller reports
        step = rs / pAp
        x = x + step * p
        r = r - step * Ap
        rs_next = float(r.ravel() @ r.ravel())
        rel = math.sqrt(rs_next) / rhs_norm
        history.append(rel)
        if rel <= tol:
            return x, k, True, history
        p = r + (rs_next / rs) * p
        rs = rs_next
    return x, max_iter, False, history


def _resolve_alphas(
    alpha: Union[float, Sequence[float], ParameterRule],
    n_t: int,
    delta: Optional[float],
) -> np.ndarray:
    if isinstance(alpha, ParameterRule):
        if delta is None:
            raise InvalidParameterError("a parameter rule needs the noise level delta")
        alpha = choose_alpha(alpha, delta)
    if np.isscalar(alpha):
        alphas = np.full(n_t, float(alpha))
    else:
        alphas = np.asarray(alpha, dtype=float)
        if alphas.shape != (n_t,):
            raise DimensionError(
                f"need one alpha per time node ({n_t}), got shape {alphas.shape}"
            )
    if not np.all(alphas > 0.0):
        raise InvalidParameterError("regularization weights must be positive")
    return alphas


def _require_hilbert(forward: DynamicForward, data: BochnerFunction) -> None:
    if (
        forward.source_exponent != 2.0
        or forward.source_space_exponent != 2.0
        or forward.data_exponent != 2.0
        or forward.data_space_exponent != 2.0
        or data.p != 2.0
        or data.space_exponent != 2.0
    ):
        raise UnsupportedGeometryError("solvers need the Hilbert geometry p = s = 2")


def _relative_error(rec: BochnerFunction, truth: Optional[BochnerFunction]) -> Optional[float]:
    if truth is None:
        return None
    denom = bochner_norm(truth)
    if denom == 0.0:
        raise InvalidInputError("truth has zero norm, relative error undefined")
    return bochner_norm(rec - truth) / denom


def tikhonov_temporal(
    forward: DynamicForward,
    data: BochnerFunction,
    alpha: Union[float, Sequence[float], ParameterRule],
    delta: Optional[float] = None,
    config: TikhonovConfig = TikhonovConfig(),
    truth: Optional[BochnerFunction] = None,
) -> SolveReport:
    """Tracking regularization: one Tikhonov problem per time node.

    For a pointwise forward map, solves at every node t_i

        (A_i* A_i + alpha_i I) x_i = A_i* y(t_i)

    by conjugate gradients and assembles the snapshots into the
    piecewise-constant tracked reconstruction.

    Parameters
    ----------
    alpha : positive real, one per node, or a ParameterRule
        A rule is evaluated at `delta`.
    truth : optional BochnerFunction
        When given, the report carries the relative space-time error, and
        the trace rows carry per-node relative errors.
    """
    t0 = time.perf_counter()
    if forward.kind != POINTWISE:
        raise UnsupportedKindError(f"tracking solver needs a pointwise map, not {forward.kind}")
    _require_hilbert(forward, data)
    _check_data(forward, data)
    fam = forward.static
    n_t = forward.time_grid.n_t
    alphas = _resolve_alphas(alpha, n_t, delta)
    snapshots = np.empty((n_t, fam.n_in))
    residuals: list[float] = []
    trace: list[tuple[int, int, float, float, float]] = []
    all_converged = True
    for i in range(n_t):
        y_i = data.values[i]
        rhs = np.asarray(fam.adjoint_apply(i, y_i), dtype=float)
        a_i = float(alphas[i])

        def normal_op(v: np.ndarray, i: int = i, a: float = a_i) -> np.ndarray:
            return np.asarray(fam.adjoint_apply(i, fam.apply(i, v)), dtype=float) + a * v

        x, _, converged, _ = _cg(normal_op, rhs, config.tol, config.max_iter)
        all_converged = all_converged and converged
        snapshots[i] = x
        r = np.asarray(fam.apply(i, x), dtype=float) - y_i
        res = math.sqrt(fam.out_weight * float(r @ r))
        residuals.append(res)
        if truth is not None:
            diff = x - truth.values[i]
            denom = math.sqrt(fam.in_weight * float(truth.values[i] @ truth.values[i]))
            node_err = math.sqrt(fam.in_weight * float(diff @ diff)) / denom if denom else math.nan
        else:
            node_err = math.nan
        trace.append((i, i, res, a_i, node_err))
    reconstruction = interpolate_tracked(
        snapshots,
        forward.time_grid,
        forward.source_exponent,
        forward.source_space_exponent,
        fam.in_weight,
    )
    return SolveReport(
        reconstruction=reconstruction,
        residuals=residuals,
        alphas=[float(a) for a in alphas],
        stop_reason="tolerance" if all_converged else "max_iter",
        iterations=n_t,
        error=_relative_error(reconstruction, truth),
        wall_time=time.perf_counter() - t0,
        trace=trace,
    )


def tikhonov_uniform(
    forward: DynamicForward,
    data: BochnerFunction,
    alpha: Union[float, ParameterRule],
    delta: Optional[float] = None,
    config: TikhonovConfig = TikhonovConfig(),
    truth: Optional[BochnerFunction] = None,
) -> SolveReport:
    """Uniform regularization over the whole space-time unknown.

    Solves (F* F + alpha I) theta = F* y by matrix-free conjugate
    gradients, for any composition kind.  For pointwise maps with constant
    alpha the normal equations decouple across nodes, so the result
    matches the tracking solver to solver tolerance.
    """
    t0 = time.perf_counter()
    _require_hilbert(forward, data)
    _check_data(forward, data)
    alphas = _resolve_alphas(alpha, 1, delta)
    a = float(alphas[0])
    rhs_fn = apply_adjoint(forward, data)
    rhs = rhs_fn.values

    def normal_op(v: np.ndarray) -> np.ndarray:
        image = apply_forward(forward, rhs_fn.with_values(v))
        back = apply_adjoint(forward, image)
        return back.values + a * v

    theta, iters, converged, history = _cg(normal_op, rhs, config.tol, config.max_iter)
    reconstruction = rhs_fn.with_values(theta)
    trace = [(k, 0, rel, a, math.nan) for k, rel in enumerate(history, start=1)]
    return SolveReport(
        reconstruction=reconstruction,
        residuals=list(history),
        alphas=[a],
        stop_reason="tolerance" if converged else "max_iter",
        iterations=iters,
        error=_relative_error(reconstruction, truth),
        wall_time=time.perf_counter() - t0,
        trace=trace,
    )


def _broadcast_taus(config: KaczmarzConfig, n: int) -> list[float]:
    if np.isscalar(config.tau):
        return [float(config.tau)] * n
    taus = [float(t) for t in config.tau]
    if len(taus) != n:
        raise DimensionError(f"need one tau per sub-problem ({n}), got {len(taus)}")
    return taus


def _estimate_omegas(
    subproblems: Sequence[LinearSubproblem],
    config: KaczmarzConfig,
    start: np.ndarray,
) -> list[float]:
    """Per-sub-problem steps 0.9 / ||F_i||^2 via power iteration on F_i* F_i."""
    if not isinstance(config.omega, str):
        return [float(config.omega)] * len(subproblems)
    omegas = []
    for idx, sub in enumerate(subproblems):
        rng = np.random.default_rng(config.power_seed + idx)
        v = rng.standard_normal(start.shape)
        lam = 0.0
        for _ in range(config.power_iterations):
            w = np.asarray(sub.adjoint(sub.apply(v)), dtype=float)
            norm = math.sqrt(float(w @ w))
            if norm == 0.0:
                lam = 0.0
                break
            lam = float(w @ v) / float(v @ v)
            v = w / norm
        omegas.append(0.9 / lam if lam > 0.0 else 1.0)
    return omegas


def _check_start(subproblems: Sequence[LinearSubproblem], start) -> np.ndarray:
    if not subproblems:
        raise InvalidParameterError("need at least one sub-problem")
    x = np.array(start, dtype=float)
    if x.ndim != 1:
        raise DimensionError(f"start must be a vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("start contains non-finite entries")
    return x


def _static_error(
    x: np.ndarray, truth: Optional[np.ndarray], weight: float
) -> Optional[float]:
    if truth is None:
        return None
    truth = np.asarray(truth, dtype=float)
    denom = math.sqrt(weight * float(truth @ truth))
    if denom == 0.0:
        raise InvalidInputError("truth has zero norm, relative error undefined")
    diff = x - truth
    return math.sqrt(weight * float(diff @ diff)) / denom


def landweber_kaczmarz(
    subproblems: Sequence[LinearSubproblem],
    config: KaczmarzConfig = KaczmarzConfig(),
    start=None,
    truth: Optional[np.ndarray] = None,
) -> SolveReport:
    """Cyclic Landweber-Kaczmarz iteration over linear sub-problems.

    Step n updates x <- x - omega_i F_i*(F_i x - y_i) with i = n mod N.
    Stopping: at the end of a sweep, if every residual recorded during that
    sweep (each at its own iterate, before its update) satisfied
    ||F_i x - y_i|| <= tau_i delta_i, the loop stops with reason
    "discrepancy"; otherwise it runs max_sweeps sweeps and reports
    "max_iter".  A residual exceeding 1e6 times the worst initial residual
    raises DivergenceError.

    Parameters
    ----------
    start : vector, default zero
        Initial unknown; its length fixes the unknown dimension.
    truth : optional vector
        When given, the report carries the relative error in the weighted
        unknown norm.
    """
    t0 = time.perf_counter()
    if start is None:
        raise InvalidParameterError("start vector is required (its length sets the unknown)")
    x = _check_start(subproblems, start)
    n_sub = len(subproblems)
    taus = _broadcast_taus(config, n_sub)
    omegas = _estimate_omegas(subproblems, config, x)
    guard = max(sub.residual_norm(sub.residual(x)) for sub in subproblems)
    guard = max(guard, np.finfo(float).tiny)
    residuals: list[float] = []
    trace: list[tuple[int, int, float, float, float]] = []
    stop_reason = "max_iter"
    n = 0
    sweeps = 0
    for _ in range(config.max_sweeps):
        cycle_met = True
        for i, sub in enumerate(subproblems):
            r = sub.residual(x)
            res = sub.residual_norm(r)
            if res > 1e6 * guard:
                raise DivergenceError(
                    f"residual {res:.3e} exceeds 1e6 x initial worst residual {guard:.3e}"
                )
            residuals.append(res)
            trace.append((n, i, res, math.nan, math.nan))
            if res > taus[i] * sub.noise_level:
                cycle_met = False
            x = x - omegas[i] * np.asarray(sub.adjoint(r), dtype=float)
            n += 1
        sweeps += 1
        if cycle_met:
            stop_reason = "discrepancy"
            break
    return SolveReport(
        reconstruction=x,
        residuals=residuals,
        alphas=[],
        stop_reason=stop_reason,
        iterations=sweeps,
        error=_static_error(x, truth, subproblems[0].unknown_weight),
        wall_time=time.perf_counter() - t0,
        trace=trace,
    )


def kaczmarz_multi_direction(
    subproblems: Sequence[LinearSubproblem],
    config: KaczmarzConfig = KaczmarzConfig(),
    start=None,
    truth: Optional[np.ndarray] = None,
) -> SolveReport:
    """Kaczmarz iteration minimizing over several remembered directions.

    At step n with current sub-problem i, the gradients of the last
    min(memory, n+1) iterates with respect to THIS sub-problem,
    d_k = F_i*(F_i x_k - y_i), span the search space; the coefficients
    solve the damped Gram least-squares system

        (G + 1e-12 tr(G) I) t = b,  G_kl = <F_i d_k, F_i d_l>, b_k = <F_i d_k, r_n>,

    which minimizes the residual of x - sum_k t_k d_k over the span.  With
    memory = 1 this is optimal-step Landweber-Kaczmarz.  Stopping and
    divergence handling match landweber_kaczmarz.
    """
    t0 = time.perf_counter()
    if start is None:
        raise InvalidParameterError("start vector is required (its length sets the unknown)")
    x = _check_start(subproblems, start)
    n_sub = len(subproblems)
    taus = _broadcast_taus(config, n_sub)
    guard = max(sub.residual_norm(sub.residual(x)) for sub in subproblems)
    guard = max(guard, np.finfo(float).tiny)
    history: deque[np.ndarray] = deque([x], maxlen=config.memory)
    residuals: list[float] = []
    trace: list[tuple[int, int, float, float, float]] = []
    stop_reason = "max_iter"
    n = 0
    sweeps = 0
    for _ in range(config.max_sweeps):
        cycle_met = True
        for i, sub in enumerate(subproblems):
            r = sub.residual(x)
            res = sub.residual_norm(r)
            if res > 1e6 * guard:
                raise DivergenceError(
                    f"residual {res:.3e} exceeds 1e6 x initial worst residual {guard:.3e}"
                )
            residuals.append(res)
            trace.append((n, i, res, math.nan, math.nan))
            if res > taus[i] * sub.noise_level:
                cycle_met = False
            directions = [np.asarray(sub.adjoint(sub.residual(xk)), dtype=float) for xk in history]
            images = [np.asarray(sub.apply(d), dtype=float) for d in directions]
            gram = sub.data_weight * np.array([[float(a @ b) for b in images] for a in images])
            damping = 1e-12 * float(np.trace(gram))
            if damping > 0.0:
                rhs = sub.data_weight * np.array([float(a @ r) for a in images])
                coeff = np.linalg.solve(gram + damping * np.eye(len(images)), rhs)
                for t_k, d_k in zip(coeff, directions):
                    x = x - t_k * d_k
            # zero trace means every direction vanished: stationary, no update
            history.append(x)
            n += 1
        sweeps += 1
        if cycle_met:
            stop_reason = "discrepancy"
            break
    return SolveReport(
        reconstruction=x,
        residuals=residuals,
        alphas=[],
        stop_reason=stop_reason,
        iterations=sweeps,
        error=_static_error(x, truth, subproblems[0].unknown_weight),
        wall_time=time.perf_counter() - t0,
        trace=trace,
    )


def time_subproblems(
    forward: DynamicForward,
    data: BochnerFunction,
    delta: float,
    noise_split: Optional[Sequence[float]] = None,
    sections: Optional[int] = None,
) -> list[LinearSubproblem]:
    """Split a forward map with a static unknown into Kaczmarz sub-problems.

    By default sub-problem i maps a single spatial vector x to the data the
    forward map would produce at node t_i if x were held constant in time:

        pointwise                F_i x = A_i x
        accumulate_then_observe  F_i x = sum_{j<=i} dt a(t_i-t_j) A_j x
        observe_then_accumulate  F_i x = (dt sum_{k<=i} a(t_k)) A_i x

    With `sections` = N, consecutive nodes are grouped into N contiguous
    blocks instead, one sub-problem per block; block residuals carry the
    dt-weighted section norm.  The noise budget delta is split evenly over
    the N sub-problems, delta_i = delta / sqrt(N), the package convention;
    pass noise_split for explicit per-sub-problem levels.
    """
    if not delta >= 0.0:
        raise InvalidParameterError(f"noise level must be >= 0, got {delta}")
    _check_data(forward, data)
    fam = forward.static
    n_t = forward.time_grid.n_t
    dt = forward.time_grid.dt
    if sections is not None and not 1 <= sections <= n_t:
        raise InvalidParameterError(f"sections must lie in [1, {n_t}], got {sections}")
    count = n_t if sections is None else sections
    if noise_split is None:
        levels = [delta / math.sqrt(count)] * count
    else:
        levels = [float(d) for d in noise_split]
        if len(levels) != count:
            raise DimensionError(
                f"need one noise level per sub-problem ({count}), got {len(levels)}"
            )
    node_apply = []
    node_adjoint = []
    for i in range(n_t):
        if forward.kind == POINTWISE:

            def apply(x: np.ndarray, i: int = i) -> np.ndarray:
                return np.asarray(fam.apply(i, x), dtype=float)

            def adjoint(r: np.ndarray, i: int = i) -> np.ndarray:
                return np.asarray(fam.adjoint_apply(i, r), dtype=float)

        elif forward.kind == ACCUMULATE_THEN_OBSERVE:

            def apply(x: np.ndarray, i: int = i) -> np.ndarray:
                acc = np.zeros(fam.n_out)
                for j in range(i + 1):
                    acc += dt * forward.kernel[i - j] * np.asarray(fam.apply(j, x), dtype=float)
                return acc

            def adjoint(r: np.ndarray, i: int = i) -> np.ndarray:
                acc = np.zeros(fam.n_in)
                for j in range(i + 1):
                    acc += dt * forward.kernel[i - j] * np.asarray(
                        fam.adjoint_apply(j, r), dtype=float
                    )
                return acc

        else:  # OBSERVE_THEN_ACCUMULATE: constant-in-time input collapses the sum
            scale = dt * float(np.sum(forward.kernel[: i + 1]))

            def apply(x: np.ndarray, i: int = i, scale: float = scale) -> np.ndarray:
                return scale * np.asarray(fam.apply(i, x), dtype=float)

            def adjoint(r: np.ndarray, i: int = i, scale: float = scale) -> np.ndarray:
                return scale * np.asarray(fam.adjoint_apply(i, r), dtype=float)

        node_apply.append(apply)
        node_adjoint.append(adjoint)
    if sections is None:
        return [
            LinearSubproblem(
                apply=node_apply[i],
                adjoint=node_adjoint[i],
                data=data.values[i],
                noise_level=levels[i],
                data_weight=fam.out_weight,
                unknown_weight=fam.in_weight,
            )
            for i in range(n_t)
        ]
    subs = []
    for k, block in enumerate(np.array_split(np.arange(n_t), sections)):
        nodes = [int(i) for i in block]

        def apply(x: np.ndarray, nodes: list[int] = nodes) -> np.ndarray:
            return np.concatenate([node_apply[i](x) for i in nodes])

        def adjoint(r: np.ndarray, nodes: list[int] = nodes) -> np.ndarray:
            parts = np.asarray(r, dtype=float).reshape(len(nodes), fam.n_out)
            acc = np.zeros(fam.n_in)
            for row, i in zip(parts, nodes):
                acc += node_adjoint[i](row)
            return dt * acc

        subs.append(
            LinearSubproblem(
                apply=apply,
                adjoint=adjoint,
                data=data.values[nodes].reshape(-1),
                noise_level=levels[k],
                data_weight=dt * fam.out_weight,
                unknown_weight=fam.in_weight,
            )
        )
    return subs
