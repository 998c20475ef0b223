"""Nelder-Mead simplex minimiser on plain Python floats.

Small problems (a handful of parameters, a cheap objective) spend most of
their time in array overhead, so this works on lists. Coefficients are the
standard ones: reflection 1, expansion 2, contraction 1/2, shrink 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence


@dataclass
class SimplexResult:
    x: list
    fun: float
    nfev: int
    nit: int
    converged: bool


def nelder_mead(
    f: Callable[[list], float],
    x0: Sequence[float],
    step: float = 0.25,
    fatol: float = 1e-12,
    max_evals: int = 100_000,
) -> SimplexResult:
    """Minimise ``f`` from ``x0``.

    Stops when the spread of objective values across the simplex is at most
    ``fatol``, or after ``max_evals`` evaluations (``converged=False``).
    """
    n = len(x0)
    x0 = [float(v) for v in x0]
    simplex = [x0]
    for i in range(n):
        v = list(x0)
        v[i] = v[i] + step if v[i] == 0 else v[i] * (1 + step) + step * 0.1
        simplex.append(v)
    values = [f(v) for v in simplex]
    nfev = n + 1
    nit = 0

    while True:
        order = sorted(range(n + 1), key=values.__getitem__)
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        if values[-1] - values[0] <= fatol:
            return SimplexResult(simplex[0], values[0], nfev, nit, True)
        if nfev >= max_evals:
            return SimplexResult(simplex[0], values[0], nfev, nit, False)
        nit += 1

        worst = simplex[-1]
        centroid = [sum(v[j] for v in simplex[:-1]) / n for j in range(n)]
        xr = [c + (c - w) for c, w in zip(centroid, worst)]
        fr = f(xr)
        nfev += 1
        if fr < values[0]:
            xe = [c + 2 * (c - w) for c, w in zip(centroid, worst)]
            fe = f(xe)
            nfev += 1
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-1]:
            xc = [c + 0.5 * (r - c) for c, r in zip(centroid, xr)]
        else:
            xc = [c + 0.5 * (w - c) for c, w in zip(centroid, worst)]
        fc = f(xc)
        nfev += 1
        if fc < min(fr, values[-1]):
            simplex[-1], values[-1] = xc, fc
            continue
        best = simplex[0]
        for i in range(1, n + 1):
            simplex[i] = [b + 0.5 * (v - b) for b, v in zip(best, simplex[i])]
            values[i] = f(simplex[i])
        nfev += n
