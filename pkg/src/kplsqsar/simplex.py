"""One-dimensional Nelder-Mead simplex minimizer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

REFLECT = 1.0
EXPAND = 2.0
CONTRACT = 0.5
SHRINK = 0.5


@dataclass
class SimplexResult:
    x: float
    fx: float
    evaluations: int
    converged: bool
    history: list = field(default_factory=list)


def nelder_mead_1d(f, x0, step, tol, max_evals, width=None, bounds=None):
    """Minimize scalar ``f`` from the simplex ``{x0, x0 + step}``.

    Parameters
    ----------
    f : callable
        Objective; ``inf`` marks an infeasible point.
    tol : float
        Stop once ``width(best, worst) < tol``. ``width`` defaults to the
        absolute difference, letting callers measure it in another space.
    max_evals : int
        Hard budget on calls to ``f``; a budget of one evaluates ``x0`` only.
    bounds : (lo, hi) or None
        Trial points are clipped into this interval.
    """
    width = width or (lambda a, b: abs(a - b))
    lo, hi = bounds if bounds is not None else (-math.inf, math.inf)
    history = []
    seen = {}

    def clip(x):
        return min(max(x, lo), hi)

    def ev(x):
        # in 1-D the shrink point can coincide with the inside contraction
        if x not in seen:
            seen[x] = f(x)
            history.append((x, seen[x]))
        return seen[x]

    x0 = clip(x0)
    f0 = ev(x0)
    if max_evals <= 1:
        return SimplexResult(x0, f0, len(history), False, history)
    x1 = clip(x0 + step)
    if x1 == x0:
        x1 = clip(x0 - step)
    f1 = ev(x1)
    pts = [(x0, f0), (x1, f1)]

    # memoized points cost no budget; the guard bounds pathological cycling
    for _ in range(100 * max_evals):
        # ties keep the earlier-listed point as best, so runs are reproducible
        pts.sort(key=lambda p: p[1])
        (xb, fb), (xw, fw) = pts
        if width(xb, xw) < tol:
            return SimplexResult(xb, fb, len(history), True, history)
        if len(history) >= max_evals:
            return SimplexResult(xb, fb, len(history), False, history)

        xr = clip(xb + REFLECT * (xb - xw))
        fr = ev(xr)
        if fr < fb:
            if len(history) < max_evals:
                xe = clip(xb + EXPAND * (xr - xb))
                fe = ev(xe)
                pts = [(xb, fb), (xe, fe) if fe < fr else (xr, fr)]
            else:
                pts = [(xb, fb), (xr, fr)]
            continue
        if len(history) >= max_evals:
            pts = [(xb, fb), (xw, fw)] if fw <= fr else [(xb, fb), (xr, fr)]
            continue
        if fr < fw:
            xc = clip(xb + CONTRACT * (xr - xb))
            fc = ev(xc)
            if fc <= fr:
                pts = [(xb, fb), (xc, fc)]
                continue
        else:
            xc = clip(xb + CONTRACT * (xw - xb))
            fc = ev(xc)
            if fc < fw:
                pts = [(xb, fb), (xc, fc)]
                continue
        xs = xb + SHRINK * (xw - xb)
        if xs not in seen and len(history) >= max_evals:
            pts = [(xb, fb), (xw, fw)]
            continue
        pts = [(xb, fb), (xs, ev(xs))]
    pts.sort(key=lambda p: p[1])
    return SimplexResult(pts[0][0], pts[0][1], len(history), False, history)
