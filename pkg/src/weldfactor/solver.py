"""Damped Gauss-Newton for the collocation systems of the Riemann and welding solvers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass
class NewtonResult:
    x: np.ndarray
    residual: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def complex_sup(r: np.ndarray) -> float:
    """Sup norm of a residual stacked as ``[real parts, imaginary parts]``."""
    half = r.size // 2
    return float(np.hypot(r[:half], r[half:]).max())


def gauss_newton(residual: Callable[[np.ndarray], np.ndarray],
                 jacobian: Callable[[np.ndarray], np.ndarray],
                 x0: np.ndarray, *, tol: float, floor: float = 0.0, max_iter: int = 60,
                 measure: Callable[[np.ndarray], float] = complex_sup) -> NewtonResult:
    """Minimise ``||residual(x)||_2`` by damped Gauss-Newton.

    Each step solves the linearised least-squares problem with unit column
    scaling and halves the step while the residual norm grows.  Iteration
    stops once the sup-norm ``measure`` drops below ``floor``, stops
    improving after passing ``tol``, stagnates above it (three steps each
    gaining less than 10%), or ``max_iter`` is reached.
    """
    x = np.array(x0, dtype=float)
    r = residual(x)
    e = measure(r)
    hist = [e]
    it = 0
    slow = 0
    for it in range(1, max_iter + 1):
        if not np.isfinite(e) or e <= floor:
            it -= 1
            break
        jac = jacobian(x)
        cscale = np.linalg.norm(jac, axis=0)
        cscale[cscale == 0] = 1.0
        try:
            dx = -np.linalg.lstsq(jac / cscale, r, rcond=None)[0] / cscale
        except np.linalg.LinAlgError:
            break
        norm0 = float(np.dot(r, r))
        lam = 1.0
        for _ in range(20):
            xn = x + lam * dx
            rn = residual(xn)
            if np.all(np.isfinite(rn)) and float(np.dot(rn, rn)) < norm0:
                break
            lam *= 0.5
        else:
            break
        en = measure(rn)
        stalled = e < tol and en > 0.5 * e
        slow = slow + 1 if en > 0.9 * e else 0
        x, r, e = xn, rn, en
        hist.append(e)
        if stalled or slow >= 3:
            break
    return NewtonResult(x, e, it, bool(e < tol), hist)
