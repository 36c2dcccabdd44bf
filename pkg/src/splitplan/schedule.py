"""Unrolled exponential schedules.

One step of the order-(2k+1) formula for ``m`` terms is the stage product

    prod_l  e^{-i H_1 z_l dt/2} ... e^{-i H_m z_l dt} ... e^{-i H_1 z_l dt/2}

with adjacent factors of the same term merged. Coefficients are multiples of
the normalized step ``dt`` (time measured in units of ``1/||H_1||``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional

from .coefficients import EAGER_K_MAX, check_order, iter_stage_coefficients, stage_coefficients
from .cost import CostInputs, PlanBound, k_star_new, n_new_bound, warn_weak_second_term
from .errors import InvalidInputError, ResourceError, VerificationError


class ExponentialOp(NamedTuple):
    term_index: int  # 1-based, terms sorted by descending norm
    coeff: float


def _strang_ops(z: float, m: int) -> Iterator[ExponentialOp]:
    half = z / 2
    for j in range(1, m):
        yield ExponentialOp(j, half)
    yield ExponentialOp(m, half)
    yield ExponentialOp(m, half)
    for j in range(m - 1, 0, -1):
        yield ExponentialOp(j, half)


def _merge_adjacent(ops) -> Iterator[ExponentialOp]:
    pending = None
    for op in ops:
        if pending is not None and pending.term_index == op.term_index:
            pending = ExponentialOp(op.term_index, pending.coeff + op.coeff)
            continue
        if pending is not None and pending.coeff != 0.0:
            yield pending
        pending = op
    if pending is not None and pending.coeff != 0.0:
        yield pending


def iter_step_ops(k: int, m: int) -> Iterator[ExponentialOp]:
    """Lazily yield the merged ops of one step; works up to the global order cap."""
    k = check_order(k)
    if int(m) != m or m < 1:
        raise InvalidInputError(f"m must be a positive integer, got {m!r}")
    stages = iter_stage_coefficients(k)
    return _merge_adjacent(op for z in stages for op in _strang_ops(z, m))


def build_step_ops(k: int, m: int) -> list[ExponentialOp]:
    k = check_order(k)
    if k > EAGER_K_MAX:
        raise ResourceError(f"k={k} is too large to materialize; use iter_step_ops")
    z = stage_coefficients(k).z.tolist()
    return list(_merge_adjacent(op for zl in z for op in _strang_ops(zl, m)))


def per_step_count(k: int, m: int) -> int:
    """Closed-form merged op count of one step."""
    if m == 1:
        return 1
    return (2 * m - 2) * 5 ** (k - 1) + 1


@dataclass(frozen=True)
class SimulationSchedule:
    k: int
    m: int
    step_ops: tuple[ExponentialOp, ...]
    n_steps: int
    dt_normalized: float
    plan: Optional[PlanBound] = None

    def __post_init__(self):
        if self.n_steps < 1:
            raise InvalidInputError("a schedule needs at least one step")

    @property
    def tau(self) -> float:
        return self.n_steps * self.dt_normalized

    @property
    def per_step(self) -> int:
        return len(self.step_ops)

    @property
    def total_exponentials(self) -> int:
        return self.per_step * self.n_steps

    @property
    def total_cross_merged(self) -> int:
        """Count when the last op of a step is merged with the first op of the next."""
        ops = self.step_ops
        if self.n_steps > 1 and ops and ops[0].term_index == ops[-1].term_index:
            return self.total_exponentials - (self.n_steps - 1)
        return self.total_exponentials

    def iter_ops(self) -> Iterator[tuple[int, int, ExponentialOp]]:
        for step in range(self.n_steps):
            for idx, op in enumerate(self.step_ops):
                yield step, idx, op


def partition_time(plan: PlanBound, tau: float) -> tuple[int, float]:
    """Number of steps and normalized step length; every step is at most ``1/M`` long."""
    if plan.branch == "single_step":
        return 1, tau
    n = math.ceil(plan.M * tau)
    return n, tau / n


def full_schedule(system, k: Optional[int], eps: float, force: bool = False) -> SimulationSchedule:
    """Plan and unroll the simulation of ``system`` to accuracy ``eps``.

    ``k=None`` picks the closed-form optimal order.
    """
    inputs = CostInputs.from_system(system, eps)
    warn_weak_second_term(inputs)
    if k is None:
        k = k_star_new(inputs, force)
    plan = n_new_bound(k, inputs, force)
    n_steps, dt = partition_time(plan, system.tau)
    ops = tuple(build_step_ops(k, system.m))
    schedule = SimulationSchedule(k, system.m, ops, n_steps, dt, plan)
    if schedule.total_exponentials > plan.N_bound:
        raise VerificationError(
            f"schedule uses {schedule.total_exponentials} exponentials, bound is {plan.N_bound}"
        )
    return schedule


def count_exponentials(schedule: SimulationSchedule) -> tuple[int, int]:
    return schedule.per_step, schedule.total_exponentials
