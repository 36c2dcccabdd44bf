"""Stage and merged coefficients of the recursive order-(2k+1) splitting.

``stage_coefficients(k)`` unwinds the five-fold recursion

    S_2k(dt) = S_2k-2(p dt)^2  S_2k-2((1 - 4p) dt)  S_2k-2(p dt)^2

into the ``K = 5**(k-1)`` time fractions ``z`` of the Strang blocks it is
made of, in left-to-right product order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import DomainError, InvalidInputError, ResourceError

K_MAX = 12
EAGER_K_MAX = 9


def check_order(k: int, k_max: int = K_MAX) -> int:
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise InvalidInputError(f"order k must be a positive integer, got {k!r}")
    if k > k_max:
        raise ResourceError(f"order k={k} exceeds the cap k_max={k_max}")
    return int(k)


def p_coefficient(k: int) -> float:
    """``1 / (4 - 4**(1/(2k-1)))``, the outer weight of recursion level ``k``."""
    if int(k) != k or k < 2:
        raise DomainError(f"p_k is defined for integer k >= 2, got {k!r}")
    return 1.0 / (4.0 - 4.0 ** (1.0 / (2 * k - 1)))


def q_coefficient(k: int) -> float:
    p = p_coefficient(k)
    return max(p, 4.0 * p - 1.0)


def _level_weights(k: int) -> tuple[float, float, float, float, float]:
    p = p_coefficient(k)
    c = 1.0 - 4.0 * p
    return (p, p, c, p, p)


@dataclass(frozen=True)
class StageCoefficients:
    k: int
    z: np.ndarray

    @property
    def K(self) -> int:
        return len(self.z)


@dataclass(frozen=True)
class MergedSchedule:
    """Alternating two-term form ``s_0, z_1, s_1, ..., z_K, s_K``."""

    k: int
    s: np.ndarray
    z: np.ndarray

    @property
    def sigma(self) -> float:
        return math.fsum(np.abs(self.s)) + math.fsum(np.abs(self.z))


@lru_cache(maxsize=None)
def _stage_array(k: int) -> np.ndarray:
    if k == 1:
        z = np.ones(1)
    else:
        prev = _stage_array(k - 1)
        z = np.concatenate([w * prev for w in _level_weights(k)])
    z.setflags(write=False)
    return z


def stage_coefficients(k: int) -> StageCoefficients:
    k = check_order(k)
    if k > EAGER_K_MAX:
        raise ResourceError(
            f"k={k} has 5**{k - 1} stages; use iter_stage_coefficients for k > {EAGER_K_MAX}"
        )
    return StageCoefficients(k, _stage_array(k))


def iter_stage_coefficients(k: int) -> Iterator[float]:
    """Lazily yield the stage coefficients, bit-identical to the eager list."""
    k = check_order(k)

    def walk(level):
        if level == 1:
            yield 1.0
            return
        for w in _level_weights(level):
            for z in walk(level - 1):
                yield w * z

    return walk(k)


def merged_from_stages(z: np.ndarray) -> np.ndarray:
    s = np.empty(len(z) + 1)
    s[0] = z[0] / 2
    s[1:-1] = (z[:-1] + z[1:]) / 2
    s[-1] = z[-1] / 2
    return s


def merged_schedule(k: int) -> MergedSchedule:
    stages = stage_coefficients(k)
    s = merged_from_stages(stages.z)
    s.setflags(write=False)
    return MergedSchedule(stages.k, s, stages.z)


def sigma(k: int) -> float:
    """Total absolute coefficient mass ``sum|s_j| + sum|z_j|`` of one two-term step."""
    return merged_schedule(k).sigma


def c_bound(k: int) -> float:
    k = check_order(k, k_max=10**6)
    return (8.0 / 3.0) * k * (5.0 / 3.0) ** (k - 1)


def d_bound(k: int, m: int) -> float:
    k = check_order(k, k_max=10**6)
    if int(m) != m or m < 1:
        raise InvalidInputError(f"m must be a positive integer, got {m!r}")
    return m * (4.0 / 3.0) * k * (5.0 / 3.0) ** (k - 1)


def z_magnitude_bound(k: int) -> float:
    k = check_order(k, k_max=10**6)
    return 4.0 * k / 3.0**k
