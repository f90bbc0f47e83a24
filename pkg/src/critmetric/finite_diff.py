"""Mixed partial derivatives by nested central differences + Richardson.

The k-th derivative tensor of a (possibly tensor-valued) function is built
from the tensor-product stencil

    D_{a1..ak} F(x) ~ (2h)^-k  sum_{s in {+1,-1}^k} (s1...sk) F(x + h sum_i s_i e_{ai})

whose truncation error expands in even powers of h, so repeated halving
of h followed by Richardson elimination of h^2, h^4, ... is valid.
Evaluations are gathered per step size and done in one batch.
"""

import itertools
import math

import numpy as np

from .errors import StepUnderflow

# (step, Richardson levels) per derivative order.  Larger steps for high
# orders keep round-off (~ eps / h^k) below the truncation error.
DEFAULT_STEPS = {
    1: (1e-3, 1),
    2: (1e-3, 1),
    3: (1e-2, 2),
    4: (5e-2, 3),
}


def _stencil(n, order):
    """Unique lattice offsets and, per sorted multi-index, (offset idx, sign)."""
    offsets = {}
    plan = []
    for alpha in itertools.combinations_with_replacement(range(n), order):
        terms = []
        for signs in itertools.product((1, -1), repeat=order):
            off = [0] * n
            for a, s in zip(alpha, signs):
                off[a] += s
            key = tuple(off)
            if key not in offsets:
                offsets[key] = len(offsets)
            terms.append((offsets[key], math.prod(signs)))
        plan.append((alpha, terms))
    lattice = np.array(sorted(offsets, key=offsets.get), dtype=float).reshape(-1, n)
    return lattice, plan


def central_difference_tensor(fn_batch, x, order, h):
    """Nested central-difference estimate of the ``order``-th derivative.

    ``fn_batch`` maps an (m, n) array of points to an (m, ...) array.
    The result has the value axes first and ``order`` derivative axes last.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if order == 0:
        return np.asarray(fn_batch(x[None, :]))[0]
    lattice, plan = _stencil(n, order)
    values = np.asarray(fn_batch(x[None, :] + h * lattice))
    out = np.empty(values.shape[1:] + (n,) * order)
    scale = (2.0 * h) ** (-order)
    for alpha, terms in plan:
        acc = np.zeros(values.shape[1:])
        for idx, sign in terms:
            acc = acc + sign * values[idx]
        acc = acc * scale
        for perm in set(itertools.permutations(alpha)):
            out[(Ellipsis,) + perm] = acc
    return out


def richardson_table(fn_batch, x, order, h, levels):
    """Full Richardson tableau; ``table[j][k]`` uses steps down to h/2^j."""
    base = [central_difference_tensor(fn_batch, x, order, h / 2**j) for j in range(levels + 1)]
    table = [[b] for b in base]
    for j in range(1, levels + 1):
        for k in range(1, j + 1):
            c = 4.0**k
            table[j].append((c * table[j][k - 1] - table[j - 1][k - 1]) / (c - 1.0))
    return table


def derivative(fn_batch, x, order, h=None, levels=None, tol=None):
    """Richardson-extrapolated derivative tensor and an error estimate.

    The error estimate is the max-abs gap between the last two diagonal
    entries of the tableau.  With ``tol`` given, a :class:`StepUnderflow`
    is raised when that gap exceeds it.
    """
    dh, dl = DEFAULT_STEPS.get(order, (5e-2, 3))
    h = dh if h is None else h
    levels = dl if levels is None else levels
    table = richardson_table(fn_batch, x, order, h, levels)
    best = table[levels][levels]
    if levels == 0:
        err = np.inf
    else:
        err = float(np.max(np.abs(best - table[levels - 1][levels - 1]), initial=0.0))
    if tol is not None and err > tol:
        raise StepUnderflow(
            f"order-{order} derivative error estimate {err:.3g} exceeds {tol:.3g}",
            partial=best,
            error_estimate=err,
        )
    return best, err


def derivative_pair(fn_batch, x, order, h=None, levels=None):
    """Best estimate and the estimate one Richardson level lower.

    Used to propagate an error estimate through downstream computations:
    run them on both and compare.
    """
    dh, dl = DEFAULT_STEPS.get(order, (5e-2, 3))
    h = dh if h is None else h
    levels = dl if levels is None else levels
    table = richardson_table(fn_batch, x, order, h, levels)
    best = table[levels][levels]
    prev = table[levels - 1][levels - 1] if levels > 0 else table[0][0]
    return best, prev
