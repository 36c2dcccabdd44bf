"""Exponential-count bounds, optimal splitting order and speedup estimates.

All functions take a :class:`CostInputs` instance holding ``m``, ``t``, the two
largest term norms and the target accuracy ``eps``. Preconditions of the
accuracy theorems are checked; a violated precondition raises
:class:`~splitplan.errors.ApplicabilityError` unless ``force=True``, in which
case an :class:`ApplicabilityWarning` is emitted and the formula is evaluated
anyway.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Literal, Optional

from .coefficients import c_bound, check_order, d_bound
from .errors import (
    ApplicabilityError,
    SmoothBoundInapplicableError,
    DomainError,
    InvalidInputError,
    VerificationError,
)

E = math.e
LN_25_3 = math.log(25.0 / 3.0)
K_SEARCH_MAX = 30

NormChoice = Literal["h1", "hsum"]


class ApplicabilityWarning(UserWarning):
    pass


class WeakSecondTermWarning(UserWarning):
    """``||H_2|| t < eps``: the high-order bounds are not the right tool here."""


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class CostInputs:
    m: int
    t: float
    norm1: float
    norm2: float
    eps: float
    norm_sum: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise InvalidInputError(f"m must be a positive integer, got {self.m!r}")
        for name in ("t", "norm1", "norm2", "eps"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be positive and finite, got {v!r}")
        if self.norm2 > self.norm1:
            raise InvalidInputError("norm2 must not exceed norm1")
        if self.eps > 1:
            raise InvalidInputError("eps must lie in (0, 1]")
        if self.norm_sum is not None and not (self.norm_sum >= 0 and math.isfinite(self.norm_sum)):
            raise InvalidInputError("norm_sum must be a nonnegative finite number")
        if self.m == 1:
            warnings.warn("m=1 is outside the scope of the splitting bounds", ApplicabilityWarning)

    @classmethod
    def from_system(cls, system, eps: float) -> "CostInputs":
        return cls(system.m, system.time, system.norm1, system.norm2, eps, system.sum_norm())

    @property
    def tau(self) -> float:
        return self.norm1 * self.t

    @property
    def x_m2(self) -> float:
        """``8 e t ||H_2|| / eps``."""
        return 8 * E * self.t * self.norm2 / self.eps

    @property
    def x(self) -> float:
        """``4 e m t ||H_2|| / eps``."""
        return 4 * self.m * E * self.t * self.norm2 / self.eps

    @property
    def flag_thm1(self) -> bool:
        return 8 * E * self.t * self.norm2 >= self.eps

    @property
    def flag_thm2(self) -> bool:
        return 4 * self.m * E * self.t * self.norm2 >= self.eps

    @property
    def weak_second_term(self) -> bool:
        return self.norm2 * self.t < self.eps


@dataclass(frozen=True)
class PlanBound:
    k: int
    M: float
    steps: int
    N_bound: int
    branch: Literal["multi_step", "single_step"]
    ceiling_arg: float


@dataclass(frozen=True)
class SpeedupRatio:
    bound: float
    computed: float
    checked: bool


def _fail(msg: str, force: bool) -> None:
    if not force:
        raise ApplicabilityError(msg)
    warnings.warn(msg, ApplicabilityWarning, stacklevel=3)


def _need_pair_condition(inputs: CostInputs, force: bool) -> None:
    if inputs.m != 2:
        raise InvalidInputError("the two-term bound needs m == 2")
    if not inputs.flag_thm1:
        _fail("requires 8 e t ||H2|| >= eps", force)


def _need_general_condition(inputs: CostInputs, force: bool) -> None:
    if not inputs.flag_thm2:
        _fail("requires 4 m e t ||H2|| >= eps", force)


def warn_weak_second_term(inputs: CostInputs) -> None:
    if inputs.weak_second_term:
        warnings.warn(
            "||H2|| t < eps: high-order splitting may not pay off in this regime",
            WeakSecondTermWarning,
            stacklevel=2,
        )


def _check_lemma_range(M: float, k: int, b: float, force: bool) -> None:
    if M * (k + 1) < b * (1 - 1e-12):
        _fail(f"step rate M={M:.6g} violates M (k+1) >= {b:.6g}", force)


def step_rate_m2(k: int, inputs: CostInputs, force: bool = False) -> float:
    """Inverse normalized step length for two terms; every step then satisfies the one-step error bound."""
    k = check_order(k, K_SEARCH_MAX)
    _need_pair_condition(inputs, force)
    ck = c_bound(k)
    M = inputs.x_m2 ** (1.0 / (2 * k)) * 2 * E * ck / (2 * k + 1)
    _check_lemma_range(M, k, ck, force)
    return M


def step_rate_many(k: int, inputs: CostInputs, force: bool = False) -> float:
    k = check_order(k, K_SEARCH_MAX)
    _need_general_condition(inputs, force)
    dk = d_bound(k, inputs.m)
    M = inputs.x ** (1.0 / (2 * k)) * 2 * E * dk / (2 * k + 1)
    _check_lemma_range(M, k, dk, force)
    return M


def _plan(k: int, M: float, m: int, tau: float, arg: float) -> PlanBound:
    per_step = (2 * m - 1) * 5 ** (k - 1)
    if M * tau >= 1:
        return PlanBound(k, M, math.ceil(M * tau), per_step * math.ceil(arg), "multi_step", arg)
    return PlanBound(k, M, 1, per_step, "single_step", arg)


def _ceiling_arg(k: int, m: int, tau: float, x: float) -> float:
    return tau * x ** (1.0 / (2 * k)) * (4 * m * E / 3) * (5.0 / 3.0) ** (k - 1)


def n_new_bound_m2(k: int, inputs: CostInputs, force: bool = False) -> PlanBound:
    """Two-term count bound ``3 5^(k-1) ceil(||H1|| t (8et||H2||/eps)^(1/2k) (8e/3)(5/3)^(k-1))``."""
    M = step_rate_m2(k, inputs, force)
    arg = inputs.tau * inputs.x_m2 ** (1.0 / (2 * k)) * (8 * E / 3) * (5.0 / 3.0) ** (k - 1)
    return _plan(k, M, 2, inputs.tau, arg)


def n_new_bound(k: int, inputs: CostInputs, force: bool = False) -> PlanBound:
    """Step rate, step count and integer exponential-count bound for ``m`` terms.

    In the multi-step branch ``steps = ceil(M ||H1|| t)`` while ``N_bound``
    uses the looser ceiling argument of the published count bound, which is
    ``M ||H1|| t (2k+1)/(2k)``; hence ``N_bound >= (2m-1) 5^(k-1) steps``.
    """
    M = step_rate_many(k, inputs, force)
    return _plan(k, M, inputs.m, inputs.tau, _ceiling_arg(k, inputs.m, inputs.tau, inputs.x))


def _smooth_value(k: int, inputs: CostInputs) -> float:
    return 2 * (2 * inputs.m - 1) * 5.0 ** (k - 1) * _ceiling_arg(k, inputs.m, inputs.tau, inputs.x)


def corollary_failures(inputs: CostInputs) -> list[str]:
    """Reasons the ceiling-free bound does not apply; empty when it does."""
    failed = []
    if not inputs.flag_thm2:
        failed.append("4 m e t ||H2|| >= eps fails")
    if 4 * inputs.m * E * inputs.tau < 3:
        disc = math.log(4 * inputs.m * E * inputs.tau / 5) ** 2 - 2 * math.log(5 / 3) * math.log(inputs.x)
        if not disc < 0:
            failed.append(f"4 m e t ||H1|| >= 3 fails and the discriminant {disc:.6g} is not negative")
    return failed


def n_new_smooth(k: int, inputs: CostInputs, force: bool = False) -> float:
    k = check_order(k, K_SEARCH_MAX)
    failed = corollary_failures(inputs)
    if failed:
        if not force:
            raise SmoothBoundInapplicableError(failed)
        warnings.warn("; ".join(failed), ApplicabilityWarning, stacklevel=2)
    return _smooth_value(k, inputs)


def n_prev_bound(k: int, inputs: CostInputs, norm: NormChoice = "h1") -> float:
    """Earlier count estimate ``m 25^k (m ||H|| t)^(1 + 1/2k) eps^(-1/2k)``.

    ``norm="h1"`` uses ``||H_1||``; ``norm="hsum"`` uses the norm of the full sum.
    """
    k = check_order(k, K_SEARCH_MAX)
    h = _prev_norm(inputs, norm)
    return inputs.m * 25.0**k * (inputs.m * h * inputs.t) ** (1 + 1.0 / (2 * k)) * (1 / inputs.eps) ** (1.0 / (2 * k))


def _prev_norm(inputs: CostInputs, norm: NormChoice) -> float:
    if norm == "h1":
        return inputs.norm1
    if norm == "hsum":
        if inputs.norm_sum is None:
            raise InvalidInputError("norm='hsum' needs CostInputs.norm_sum")
        return inputs.norm_sum
    raise InvalidInputError(f"unknown norm choice {norm!r}")


def k_star_new(inputs: CostInputs, force: bool = False) -> int:
    _need_general_condition(inputs, force)
    inner = 0.5 * math.log(inputs.x) / LN_25_3
    return max(round_half_up(math.sqrt(max(inner, 0.0))), 1)


def k_star_prev(inputs: CostInputs, norm: NormChoice = "h1") -> int:
    y = inputs.m * _prev_norm(inputs, norm) * inputs.t / inputs.eps
    arg = math.log(y, 5) + 1 if y > 0 else -math.inf
    if arg < 0:
        raise DomainError(f"m ||H|| t / eps = {y:.6g} is below 1/5")
    return max(round_half_up(0.5 * math.sqrt(arg)), 1)


def n_star_new(inputs: CostInputs, force: bool = False) -> float:
    _need_general_condition(inputs, force)
    if inputs.eps > inputs.m * inputs.t * inputs.norm2:
        _fail("requires eps <= m t ||H2||", force)
    m = inputs.m
    expo = 2 * math.sqrt(max(0.5 * LN_25_3 * math.log(inputs.x), 0.0))
    return (8.0 / 3.0) * (2 * m - 1) * m * E * inputs.tau * math.exp(expo)


def n_star_prev(inputs: CostInputs, norm: NormChoice = "h1") -> float:
    h = _prev_norm(inputs, norm)
    y = inputs.m * h * inputs.t / inputs.eps
    if y < 1:
        raise DomainError(f"m ||H|| t / eps = {y:.6g} is below 1")
    return 2 * inputs.m**2 * h * inputs.t * math.exp(2 * math.sqrt(math.log(5) * math.log(y)))


def speedup_bound(k: int, inputs: CostInputs) -> float:
    k = check_order(k, K_SEARCH_MAX)
    return 2 / 3.0**k * (4 * E * inputs.norm2 / inputs.norm1) ** (1.0 / (2 * k))


def speedup_ratio(k: int, inputs: CostInputs, force: bool = False) -> SpeedupRatio:
    """Closed-form ratio bound next to the directly computed ``N_new / N_prev``.

    The inequality is asserted when the ceiling-free bound applies and the
    plan is in the multi-step branch; a breach raises VerificationError.
    """
    bound = speedup_bound(k, inputs)
    computed = n_new_smooth(k, inputs, force) / n_prev_bound(k, inputs)
    checked = not corollary_failures(inputs) and step_rate_many(k, inputs, force=True) * inputs.tau >= 1
    if checked and computed > bound * (1 + 1e-9):
        raise VerificationError(f"ratio {computed:.6g} exceeds its bound {bound:.6g}")
    return SpeedupRatio(bound, computed, checked)


def k_star_oracle(inputs: CostInputs, k_range: Iterable[int] = range(1, K_SEARCH_MAX + 1)) -> int:
    """Exhaustive argmin of the ceiling-free count over ``k_range``; ties go to the smaller k."""
    best_k, best = None, math.inf
    for k in k_range:
        v = _smooth_value(k, inputs)
        if v < best:
            best_k, best = k, v
    return best_k


def stirling_check(k: int, m: int = 2) -> bool:
    """Check the factorial and coefficient-root inequalities used to size ``M``."""
    k = check_order(k, 15)
    inv_root_fact = math.exp(-math.lgamma(2 * k + 2) / (2 * k))
    fact_ok = inv_root_fact <= math.exp(1 + 1 / (2 * k)) / (2 * k + 1)
    c_ok = c_bound(k) ** (1 / (2 * k)) <= 2 ** (1 + 1 / (2 * k))
    d_ok = d_bound(k, m) ** (1 / (2 * k)) <= 2 * m ** (1 / (2 * k))
    return fact_ok and c_ok and d_ok
