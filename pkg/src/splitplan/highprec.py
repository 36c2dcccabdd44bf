"""Extended-precision one-step errors for order fits below the float64 floor.

The one-step error of high orders drops under ~1e-14 at modest step sizes,
where float64 round-off in a product of dozens of unitaries dominates. These
helpers redo the same computation with mpmath at ``dps`` decimal digits.
"""

from __future__ import annotations

import mpmath
import numpy as np


def _eig(matrix, ctx):
    return ctx.eigh(ctx.matrix(matrix.tolist()))


def _exp(eig, theta, ctx):
    w, v = eig
    return v * ctx.diag([ctx.exp(-1j * theta * x) for x in w]) * v.H


def _spectral_norm(a, ctx):
    w, _ = ctx.eigh(a.H * a)
    return ctx.sqrt(max(max(w), 0))


def single_step_error_mp(terms, ops, dt: float, dps: int = 40) -> float:
    """Distance between ``exp(-i sum(H) dt)`` and the scheduled step, both at ``dps`` digits."""
    ctx = mpmath.mp.clone()
    ctx.dps = dps
    eigs = [_eig(t.matrix, ctx) for t in terms]
    total = sum((t.matrix for t in terms[1:]), terms[0].matrix)
    dt = ctx.mpf(dt)
    u = ctx.eye(terms[0].dim)
    for op in ops:
        u = u * _exp(eigs[op.term_index - 1], ctx.mpf(op.coeff) * dt, ctx)
    exact = _exp(_eig(total, ctx), dt, ctx)
    return float(_spectral_norm(exact - u, ctx))


def _power(u, n, ctx):
    result = ctx.eye(u.rows)
    while n:
        if n & 1:
            result = result * u
        u = u * u
        n >>= 1
    return result


def schedule_product_mp(terms, ops, dt: float, n_steps: int, dps: int = 30):
    """The full scheduled product at ``dps`` digits, returned as a complex128 array.

    Round-off grows with the total number of exponentials, so long float64
    runs carry a ~1e-16-per-operation floor; this path removes it.
    """
    ctx = mpmath.mp.clone()
    ctx.dps = dps
    eigs = [_eig(t.matrix, ctx) for t in terms]
    dt = ctx.mpf(dt)
    u = ctx.eye(terms[0].dim)
    for op in ops:
        u = u * _exp(eigs[op.term_index - 1], ctx.mpf(op.coeff) * dt, ctx)
    u = _power(u, n_steps, ctx)
    return np.array([[complex(u[i, j]) for j in range(u.cols)] for i in range(u.rows)])
