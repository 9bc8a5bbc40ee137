"""Golden-section maximisation of unimodal functions, element-wise over arrays."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

ArrayFunction = Callable[[np.ndarray], np.ndarray]


def golden_section_max(
    func: ArrayFunction,
    lower: np.ndarray | float,
    upper: np.ndarray | float,
    *,
    tolerance: float = 1e-6,
    max_iter: int = 200,
) -> tuple[np.ndarray, np.ndarray]:
    """Maximise ``func`` on ``[lower, upper]`` independently for every element.

    ``func`` receives an array of abscissae with the broadcast shape of the
    bounds and must return values of the same shape. Returns ``(x, f(x))``;
    the end points are compared with the interior estimate so a monotone
    function returns the better bound.
    """

    a = np.array(lower, dtype=float)
    b = np.array(upper, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    a, b = a.copy(), b.copy()
    if np.any(b < a):
        raise ValueError("empty search interval")

    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = func(c)
    fd = func(d)
    for _ in range(max_iter):
        if np.all(b - a <= tolerance):
            break
        left = fc >= fd
        # keep [a, d] where f(c) >= f(d), else [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c = b - INV_PHI * (b - a)
        d = a + INV_PHI * (b - a)
        fc = func(c)
        fd = func(d)

    x = (a + b) / 2.0
    candidates = np.stack([x, np.array(lower, dtype=float) + 0 * x, np.array(upper, dtype=float) + 0 * x])
    values = np.stack([func(row) for row in candidates])
    best = np.argmax(values, axis=0)
    x_best = np.take_along_axis(candidates, best[None, ...], axis=0)[0]
    f_best = np.take_along_axis(values, best[None, ...], axis=0)[0]
    return x_best, f_best


def golden_section_max_scalar(
    func: Callable[[float], float],
    lower: float,
    upper: float,
    *,
    tolerance: float = 1e-6,
    max_iter: int = 200,
) -> tuple[float, float]:
    x, value = golden_section_max(
        lambda values: np.vectorize(func, otypes=[float])(values),
        lower,
        upper,
        tolerance=tolerance,
        max_iter=max_iter,
    )
    return float(x), float(value)


__all__ = ["golden_section_max", "golden_section_max_scalar"]
