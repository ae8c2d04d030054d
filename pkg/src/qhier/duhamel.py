"""Iterated time-ordered integrals over the simplex 0 <= t_m <= ... <= t_1 <= t.

Integrands here are products of propagators, hence entire in every time
variable, so composite Gauss-Legendre converges extremely fast; the driver
doubles the panel count per level until two successive evaluations agree.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import QuadratureError
from .linalg import max_abs


@lru_cache(maxsize=None)
def _nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel_points(a: float, b: float, order: int, panels: int
                  ) -> tuple[np.ndarray, np.ndarray]:
    x, w = _nodes(order)
    edges = np.linspace(a, b, panels + 1)
    pts = []
    wts = []
    for i in range(panels):
        lo, hi = edges[i], edges[i + 1]
        half = 0.5 * (hi - lo)
        pts.append(half * x + 0.5 * (hi + lo))
        wts.append(half * w)
    return np.concatenate(pts), np.concatenate(wts)


def simplex_quad(t: float, depth: int,
                 f: Callable[[Sequence[float]], np.ndarray],
                 order: int = 8, panels: int = 1) -> np.ndarray:
    """Integrate f over the ordered simplex with fixed quadrature resolution.

    f receives times (t_1, ..., t_depth) with t >= t_1 >= ... >= t_depth >= 0.
    """
    if depth == 0:
        return f(())

    def level(k: int, upper: float, times: tuple[float, ...]) -> np.ndarray:
        pts, wts = _panel_points(0.0, upper, order, panels)
        acc = None
        for p, w in zip(pts, wts):
            val = (f(times + (p,)) if k == depth
                   else level(k + 1, p, times + (p,)))
            acc = w * val if acc is None else acc + w * val
        return acc

    return level(1, float(t), ())


def nested_integral(t: float, depth: int,
                    f: Callable[[Sequence[float]], np.ndarray],
                    tol: float = 1e-9, order: int = 8,
                    max_doublings: int = 6) -> np.ndarray:
    """Simplex integral refined by panel doubling until successive values agree.

    Cost multiplies by 2^depth per refinement; the analytic integrands used
    here almost always converge at one or two panels.
    """
    if t == 0.0 or depth == 0:
        return simplex_quad(t, depth, f, order, 1)
    prev = None
    panels = 1
    for _ in range(max_doublings + 1):
        val = simplex_quad(t, depth, f, order, panels)
        if prev is not None and max_abs(val - prev) < tol:
            return val
        prev = val
        panels *= 2
    raise QuadratureError(
        f"nested integral did not settle below {tol} after "
        f"{max_doublings} panel doublings (depth {depth}, t={t})")
