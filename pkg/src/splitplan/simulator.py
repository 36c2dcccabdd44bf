"""Run schedules on dense matrices and compare against exact evolution."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .coefficients import c_bound, check_order, d_bound
from .highprec import schedule_product_mp, single_step_error_mp
from .errors import DomainError, InsufficientDataError, InvalidInputError
from .linalg import HamiltonianSystem, HermitianTerm, check_dim, operator_distance, unitary_exp
from .schedule import SimulationSchedule, build_step_ops, full_schedule

BOUND_RTOL = 1e-9
ERROR_FLOOR = 1e-13


@dataclass(frozen=True)
class ErrorReport:
    measured_error: float
    analytic_bound: float
    bound_satisfied: bool
    dt_normalized: float
    k: int
    m: int


@dataclass(frozen=True)
class OrderFit:
    k: int
    dt_grid: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float
    intercept: float


def _report(measured, bound, dt, k, m) -> ErrorReport:
    return ErrorReport(measured, bound, measured <= bound * (1 + BOUND_RTOL), dt, k, m)


def exact_evolution(system: HamiltonianSystem) -> np.ndarray:
    """``exp(-i (H_1 + ... + H_m) t)`` from the eigendecomposition of the sum."""
    check_dim(system.dim)
    return unitary_exp(HermitianTerm(system.total()), system.time)


def _normalized_exact(system: HamiltonianSystem, dt: float) -> np.ndarray:
    total = sum((h.matrix for h in system.normalized_terms[1:]), system.normalized_terms[0].matrix)
    return unitary_exp(HermitianTerm(total), dt)


def step_unitary(terms: Sequence[HermitianTerm], ops, dt: float) -> np.ndarray:
    u = np.eye(terms[0].dim, dtype=complex)
    for op in ops:
        u = u @ unitary_exp(terms[op.term_index - 1], op.coeff * dt)
    return u


def apply_schedule(
    system: HamiltonianSystem, schedule: SimulationSchedule, dps: Optional[int] = None
) -> np.ndarray:
    """Ordered product of all scheduled exponentials of the normalized terms.

    Every step is the same matrix, so the step unitary is built once and
    raised to the ``n_steps`` power. With ``dps`` set the product is formed in
    mpmath at that many digits and rounded to complex128 once at the end.
    """
    if schedule.m != system.m:
        raise InvalidInputError(f"schedule is for m={schedule.m}, system has m={system.m}")
    check_dim(system.dim)
    if dps is not None:
        return schedule_product_mp(system.normalized_terms, schedule.step_ops, schedule.dt_normalized,
                                   schedule.n_steps, dps)
    u = step_unitary(system.normalized_terms, schedule.step_ops, schedule.dt_normalized)
    return np.linalg.matrix_power(u, schedule.n_steps)


def lemma_constant(k: int, m: int) -> float:
    return c_bound(k) if m == 2 else d_bound(k, m)


def lemma_limit(k: int, m: int) -> float:
    """Largest normalized step for which the one-step error bound applies."""
    return (k + 1) / lemma_constant(k, m)


def lemma_bound(k: int, m: int, norm2_normalized: float, dt: float) -> float:
    """``4 ||H_2|| (b_k |dt|)^(2k+1) / (2k+1)!`` with ``b_k = c_k`` (m=2) or ``d_k``."""
    k = check_order(k)
    if not 0 < norm2_normalized <= 1:
        raise DomainError("normalized ||H2|| must lie in (0, 1]")
    b = lemma_constant(k, m)
    if b * abs(dt) > (k + 1) * (1 + 1e-12):
        raise DomainError(f"b_k |dt| <= k+1 fails: {b * abs(dt):.6g} > {k + 1}")
    if dt == 0:
        return 0.0
    log_val = (2 * k + 1) * math.log(b * abs(dt)) - math.lgamma(2 * k + 2)
    return 4 * norm2_normalized * math.exp(log_val)


def single_step_error(system: HamiltonianSystem, k: int, dt: float, ops=None) -> float:
    if ops is None:
        ops = build_step_ops(k, system.m)
    approx = step_unitary(system.normalized_terms, ops, dt)
    return operator_distance(_normalized_exact(system, dt), approx)


def lemma_check(system: HamiltonianSystem, k: int, dt: float, ops=None) -> ErrorReport:
    check_dim(system.dim)
    n2 = system.normalized_terms[1].norm
    bound = lemma_bound(k, system.m, n2, dt)
    return _report(single_step_error(system, k, dt, ops), bound, dt, k, system.m)


def verify_plan(
    system: HamiltonianSystem,
    k: Optional[int],
    eps: float,
    force: bool = False,
    schedule: Optional[SimulationSchedule] = None,
) -> ErrorReport:
    """Build the planned schedule, run it and compare with the exact evolution against ``eps``."""
    check_dim(system.dim)
    if schedule is None:
        schedule = full_schedule(system, k, eps, force)
    measured = operator_distance(exact_evolution(system), apply_schedule(system, schedule))
    return _report(measured, eps, schedule.dt_normalized, schedule.k, system.m)


def fit_order(
    system: HamiltonianSystem, k: int, dt_grid: Sequence[float], dps: Optional[int] = None
) -> OrderFit:
    """Least-squares slope of log(one-step error) against log(dt).

    Steps beyond the one-step bound's range and errors at the floating-point
    floor are dropped. With ``dps`` set, errors are measured in mpmath at that
    many digits and the floor moves down to ``10**(5 - dps)``.
    """
    limit = lemma_limit(k, system.m)
    ops = build_step_ops(k, system.m)
    floor = ERROR_FLOOR if dps is None else 10.0 ** (5 - dps)
    dts, errs = [], []
    for dt in sorted(dt_grid, reverse=True):
        if dt > limit:
            continue
        if dps is None:
            err = single_step_error(system, k, dt, ops)
        else:
            err = single_step_error_mp(system.normalized_terms, ops, dt, dps)
        if err > floor:
            dts.append(dt)
            errs.append(err)
    if len(dts) < 3:
        raise InsufficientDataError(f"only {len(dts)} usable points for the order fit")
    slope, intercept = np.polyfit(np.log(dts), np.log(errs), 1)
    return OrderFit(k, tuple(dts), tuple(errs), float(slope), float(intercept))
