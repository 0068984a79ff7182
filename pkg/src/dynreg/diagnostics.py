"""Ill-posedness probes: dense spectra, integrability tails, translation moduli.

Dense matrices appear only here (and in test oracles): frozen-time and
stacked operators are assembled column by column through the matrix-free
interface, with quadrature weights folded in so plain coordinate inner
products on the assembled matrix reproduce the weighted ones.  Singular
values come from a one-sided Jacobi iteration on the matrix itself; the
normal matrix M^T M is never formed, since squaring would cost half the
small singular values' accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bochner import BochnerFunction, bochner_norm, spatial_norm, translate
from .errors import (
    DomainError,
    InvalidInputError,
    InvalidParameterError,
    ResourceLimitError,
    UnsupportedKindError,
)
from .operators import DynamicForward, OperatorFamily, POINTWISE, apply_adjoint, apply_forward

SIZE_GUARD = 2_000_000  # max entries of any dense assembly
_JACOBI_TOL = 1e-15
_JACOBI_MAX_SWEEPS = 60


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Singular values of one frozen-time or stacked operator.

    index is the time index for frozen-time spectra or the string "stacked".
    condition is sigma_max / sigma_min, or +inf when the matrix is flagged
    rank-deficient (sigma_min <= 1e-3 * eps * sigma_max).
    """

    index: int | str
    singular_values: np.ndarray
    condition: float
    rank_deficient: bool


def _unit_impulse(n: int, j: int) -> np.ndarray:
    e = np.zeros(n)
    e[j] = 1.0
    return e


def _guard(rows: int, cols: int, what: str) -> None:
    if rows * cols > SIZE_GUARD:
        raise ResourceLimitError(
            f"{what} would hold {rows * cols} entries (guard: {SIZE_GUARD})"
        )


def assemble_dense(
    op: DynamicForward | OperatorFamily,
    time_index: int | None = None,
    adjoint: bool = False,
) -> np.ndarray:
    """Dense matrix of a family at one time index, or of a stacked forward map.

    Quadrature weights are folded into the entries: the returned M maps and
    measures in orthonormalized coordinates, so euclidean norms of M match
    weighted norms of the operator and the adjoint assembly equals the
    transpose of the forward assembly.  For an OperatorFamily, time_index
    defaults to 0; for a DynamicForward with time_index set, the map must
    be pointwise.

    With adjoint=True the adjoint operator is assembled instead (through
    adjoint_apply / apply_adjoint on unit impulses).
    """
    if isinstance(op, OperatorFamily):
        i = 0 if time_index is None else time_index
        fam = op
        _guard(fam.n_out, fam.n_in, "frozen-time assembly")
        if adjoint:
            fold = math.sqrt(fam.in_weight / fam.out_weight)
            cols = [fam.adjoint_apply(i, _unit_impulse(fam.n_out, r)) for r in range(fam.n_out)]
            return fold * np.array(cols, dtype=float).T
        fold = math.sqrt(fam.out_weight / fam.in_weight)
        cols = [fam.apply(i, _unit_impulse(fam.n_in, j)) for j in range(fam.n_in)]
        return fold * np.array(cols, dtype=float).T
    forward = op
    if time_index is not None:
        if forward.kind != POINTWISE:
            raise UnsupportedKindError(
                f"frozen-time assembly needs a pointwise map, not {forward.kind}"
            )
        if not 0 <= time_index < forward.time_grid.n_t:
            raise DomainError(
                f"time index {time_index} outside [0, {forward.time_grid.n_t})"
            )
        return assemble_dense(forward.static, time_index, adjoint=adjoint)
    n_t = forward.time_grid.n_t
    n_in, n_out = forward.static.n_in, forward.static.n_out
    _guard(n_t * n_out, n_t * n_in, "stacked assembly")
    if adjoint:
        fold = math.sqrt(forward.static.in_weight / forward.static.out_weight)
        M = np.empty((n_t * n_in, n_t * n_out))
        impulse = np.zeros((n_t, n_out))
        for l in range(n_t):
            for r in range(n_out):
                impulse[l, r] = 1.0
                image = apply_adjoint(forward, forward.data_template(impulse))
                M[:, l * n_out + r] = fold * image.values.ravel()
                impulse[l, r] = 0.0
        return M
    fold = math.sqrt(forward.static.out_weight / forward.static.in_weight)
    M = np.empty((n_t * n_out, n_t * n_in))
    impulse = np.zeros((n_t, n_in))
    for l in range(n_t):
        for j in range(n_in):
            impulse[l, j] = 1.0
            image = apply_forward(forward, forward.source_template(impulse))
            M[:, l * n_in + j] = fold * image.values.ravel()
            impulse[l, j] = 0.0
    return M


def singular_values(M) -> np.ndarray:
    """All min(m, n) singular values of M, descending, by one-sided Jacobi.

    Columns of (a copy of) M are rotated pairwise until mutually orthogonal;
    the singular values are the resulting column norms.  The matrix is
    worked on directly rather than through M^T M, so well-separated values
    are accurate to about 1e-10 relative.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise InvalidInputError(f"need a non-empty 2-d matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix contains non-finite entries")
    if A.shape[0] < A.shape[1]:
        A = A.T.copy()
    n = A.shape[1]
    for _ in range(_JACOBI_MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                ap = A[:, p]
                aq = A[:, q]
                gamma = float(ap @ aq)
                alpha = float(ap @ ap)
                beta = float(aq @ aq)
                if abs(gamma) <= _JACOBI_TOL * math.sqrt(alpha * beta):
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                new_p = c * ap - s * aq
                new_q = s * ap + c * aq
                A[:, p] = new_p
                A[:, q] = new_q
                rotated = True
        if not rotated:
            break
    sigmas = np.sqrt(np.sum(A * A, axis=0))
    sigmas.sort()
    return sigmas[::-1].copy()


def _spectrum_report(index: int | str, sigmas: np.ndarray) -> SpectrumReport:
    smax = float(sigmas[0]) if sigmas.size else 0.0
    smin = float(sigmas[-1]) if sigmas.size else 0.0
    deficient = smax == 0.0 or smin <= 1e-3 * np.finfo(float).eps * smax
    condition = math.inf if deficient else smax / smin
    sigmas = sigmas.copy()
    sigmas.setflags(write=False)
    return SpectrumReport(index, sigmas, condition, deficient)


def temporal_spectrum(forward: DynamicForward, time_index: int) -> SpectrumReport:
    """Spectrum of the frozen-time operator of a pointwise forward map."""
    M = assemble_dense(forward, time_index)
    return _spectrum_report(time_index, singular_values(M))


def stacked_spectrum(forward: DynamicForward) -> SpectrumReport:
    """Spectrum of the full space-time operator.

    For pointwise maps the stacked matrix is block diagonal, so this equals
    the multiset union of all frozen-time spectra.
    """
    M = assemble_dense(forward)
    return _spectrum_report("stacked", singular_values(M))


def integrability_tail(
    forward: DynamicForward,
    inputs,
    radii,
    q: float = 1.0,
) -> np.ndarray:
    """Tail mass of the forward images over a bounded family of sources.

    For each radius r this returns sup over the inputs of

        sum_{i : ||f(t_i)|| > r} dt * ||f(t_i)||^q,   f = forward(input),

    the discrete witness of (non-)uniform integrability: for uniformly
    bounded composites it vanishes for large r, while scaling families like
    1/t keep a diverging tail under grid refinement.

    Returns an array of rows (r, tail).  Every input must lie in the unit
    ball of the source space.
    """
    if not q > 0.0:
        raise InvalidParameterError(f"tail exponent must be positive, got {q}")
    radii = [float(r) for r in radii]
    if not radii or any(not np.isfinite(r) or r <= 0.0 for r in radii):
        raise InvalidParameterError(f"radii must be positive reals, got {radii}")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise InvalidParameterError("radii must be strictly ascending")
    inputs = list(inputs)
    if not inputs:
        raise InvalidInputError("no input functions given")
    for n, theta in enumerate(inputs):
        if bochner_norm(theta) > 1.0 + 1e-9:
            raise InvalidInputError(f"input {n} lies outside the unit ball")
    dt = forward.time_grid.dt
    node_norms = []
    for theta in inputs:
        f = apply_forward(forward, theta)
        node_norms.append(
            [spatial_norm(f.values[i], f.space_weight, f.space_exponent) for i in range(f.n_t)]
        )
    table = np.empty((len(radii), 2))
    for row, r in enumerate(radii):
        sup_mass = 0.0
        for norms in node_norms:
            mass = 0.0
            for norm in norms:
                if norm > r:
                    mass += dt * norm**q
            sup_mass = max(sup_mass, mass)
        table[row] = (r, sup_mass)
    return table


def translation_modulus(ensemble, shifts) -> np.ndarray:
    """Worst-case translation modulus sup_f ||tau_z f - f|| over an ensemble.

    Shifts must be grid multiples in [0, T); the difference is measured on
    the surviving nodes.  Small moduli under refinement are the practical
    footprint of a relatively compact family; the probe is meant for
    ensembles of forward images or reconstructions.

    Returns an array of rows (z, modulus).
    """
    ensemble = list(ensemble)
    if not ensemble:
        raise InvalidInputError("no ensemble members given")
    first = ensemble[0]
    for f in ensemble[1:]:
        first._require_same_geometry(f)
    dt = first.grid.dt
    shifts = [float(z) for z in shifts]
    for z in shifts:
        if not np.isfinite(z) or abs(z / dt - round(z / dt)) > 1e-9:
            raise DomainError(f"shift {z} is not a grid multiple of dt={dt}")
    table = np.empty((len(shifts), 2))
    for row, z in enumerate(shifts):
        worst = 0.0
        for f in ensemble:
            shifted = translate(f, z)
            head = BochnerFunction(
                shifted.grid,
                f.values[: shifted.n_t],
                f.p,
                f.space_exponent,
                f.space_weight,
            )
            worst = max(worst, bochner_norm(shifted - head))
        table[row] = (z, worst)
    return table
