"""Conformal welding of an analytic circle homeomorphism.

Given an increasing degree-1 circle map ``phi`` find a power series
``F_int`` on the disk and a Laurent series ``F_ext`` on the exterior disk with

    F_int(exp(i theta)) = F_ext(exp(i phi(theta)))

normalised by ``F_int(0) = 0``, ``F_ext(inf) = inf`` and ``F_ext(z) = z + O(1)``.
With that normalisation the collocation equations are linear in the unknown
coefficients, so each Newton solve converges in one step; the continuation
in ``phi`` only serves to locate the stage at which a failing solve breaks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .confmap import (BoundaryCorrespondence, ConformalMap, LaurentSeriesMap,
                      MoebiusMap, PowerSeriesMap)
from .curves import INFINITY, AnalyticCurve, uniform_nodes
from .errors import NoConvergence, NonMonotoneInput
from .riemann import UNIT_DISK, UNIT_EXTERIOR

DEFAULT_TOL = 1e-10
DEFAULT_STAGES = 8
MAX_BISECT = 4


@dataclass
class WeldingProblem:
    phi: BoundaryCorrespondence
    order: int | None = None
    tol: float = DEFAULT_TOL
    stages: int = DEFAULT_STAGES
    nodes: int | None = None

    def series_order(self) -> int:
        return self.order or max(8, math.ceil(1.5 * self.phi.order))


@dataclass
class WeldingSolution:
    f_int: PowerSeriesMap
    f_ext: LaurentSeriesMap
    weld_curve: AnalyticCurve
    residual: float
    iterations: int = 1
    stage: float = 1.0
    log: list = field(default_factory=list)


def _check_input(phi: BoundaryCorrespondence) -> None:
    if phi.direction != 1:
        raise NonMonotoneInput("welding needs an orientation-preserving correspondence")
    slope = phi.min_slope(max(16 * phi.order, 256))
    if slope <= 0:
        raise NonMonotoneInput(f"correspondence is not monotone (min slope {slope:.3e})")


def _solve_linear(phi: BoundaryCorrespondence, order: int, nodes: int) -> tuple[np.ndarray, np.ndarray, int]:
    theta = uniform_nodes(nodes)
    ph = phi(theta)
    ephi = np.exp(1j * ph)
    k = np.arange(order + 1)
    jac = np.concatenate([np.exp(1j * np.outer(theta, k[1:])), -np.exp(-1j * np.outer(ph, k))], axis=1)
    # Newton from the identity weld; the Jacobian is constant so one QR serves every step
    q, r_fac = np.linalg.qr(jac)
    x = np.zeros(jac.shape[1], dtype=complex)
    x[0] = 1.0
    res = jac @ x - ephi
    best = float(np.abs(res).max())
    its = 0
    for its in range(1, 4):
        xn = x - solve_triangular(r_fac, q.conj().T @ res)
        rn = jac @ xn - ephi
        en = float(np.abs(rn).max())
        if en >= best and its > 1:
            break
        x, res, best = xn, rn, en
    return x[:order], x[order:], its


def _build(a: np.ndarray, b: np.ndarray) -> tuple[PowerSeriesMap, LaurentSeriesMap, AnalyticCurve]:
    f_int = PowerSeriesMap(np.concatenate([[0j], a]), domain=UNIT_DISK)
    f_ext = LaurentSeriesMap(1.0, b, domain=UNIT_EXTERIOR)
    return f_int, f_ext, f_int.boundary_curve()


def _residual(f_int, f_ext, phi, m) -> float:
    t = uniform_nodes(m)
    lhs = f_int(np.exp(1j * t))
    rhs = f_ext(np.exp(1j * phi(t)))
    return float(np.abs(lhs - rhs).max())


def welding_residual(solution: WeldingSolution, phi: BoundaryCorrespondence, m: int | None = None) -> float:
    """Sup of ``|F_int(e^{it}) - F_ext(e^{i phi(t)})|`` on a grid at least 4x the collocation grid."""
    m = m or 16 * max(solution.f_int.order, solution.f_ext.order, 8)
    return _residual(solution.f_int, solution.f_ext, phi, m)


def solve_welding(problem: WeldingProblem) -> WeldingSolution:
    """Welding maps for ``problem.phi`` with residual below ``tol`` times the weld-curve diameter."""
    phi = problem.phi
    _check_input(phi)
    order = problem.series_order()
    # the exterior columns are sampled at phi(theta_j): keep them oversampled where phi' is large
    stretch = float(np.max(phi.derivative(uniform_nodes(max(16 * phi.order, 256)))))
    nodes = problem.nodes or int(math.ceil(2 * order * max(2.0, stretch)))
    dense = 4 * nodes

    def attempt(t):
        ph = phi if t == 1.0 else phi.blend(t)
        if not ph.is_monotone(max(16 * ph.order, 256)):
            raise NonMonotoneInput(f"intermediate correspondence at t={t} is not monotone")
        a, b, its = _solve_linear(ph, order, nodes)
        f_int, f_ext, curve = _build(a, b)
        res = _residual(f_int, f_ext, ph, dense)
        ok = np.isfinite(res) and res < problem.tol * max(curve.diameter, 1e-300) and curve.is_valid()
        return ok, (f_int, f_ext, curve, res, its)

    ok, sol = attempt(1.0)
    log = [{"t": 1.0, "ok": bool(ok), "residual": sol[3]}]
    if ok:
        return WeldingSolution(*sol, stage=1.0, log=log)

    # walk the homotopy to report where the solve breaks down
    prev = 0.0
    for k in range(1, problem.stages + 1):
        t = k / problem.stages
        ok, sol = attempt(t)
        log.append({"t": t, "ok": bool(ok), "residual": sol[3]})
        if not ok:
            lo, hi = prev, t
            for _ in range(MAX_BISECT):
                mid = 0.5 * (lo + hi)
                ok_mid, sol_mid = attempt(mid)
                log.append({"t": mid, "ok": bool(ok_mid), "residual": sol_mid[3]})
                lo, hi = (mid, hi) if ok_mid else (lo, mid)
            raise NoConvergence(
                f"welding failed between t={lo:.4f} and t={hi:.4f} (residual {sol[3]:.3e})",
                stage=hi, diagnostics={"log": log})
        prev = t
    raise NoConvergence("welding failed at the target correspondence", stage=1.0,
                        diagnostics={"log": log})


def _ring_coefficients(fmap: ConformalMap, radius: float, m: int) -> tuple[complex, complex, complex]:
    t = uniform_nodes(m)
    c = np.fft.fft(np.asarray(fmap(radius * np.exp(1j * t)))) / m
    return complex(c[1] / radius), complex(c[0]), complex(c[-1] * radius)


def far_field(fmap: ConformalMap, radius: float = 2.0, m: int = 256,
              max_doublings: int = 8) -> tuple[complex, complex, complex]:
    """Coefficients ``(lam, c0, c1)`` of ``fmap(z) = lam z + c0 + c1/z + ...`` near infinity.

    Computed by FFT on circles ``|z| = radius * 2^j``; the radius is doubled
    until two successive circles agree, i.e. until no pole lies outside.
    """
    prev = _ring_coefficients(fmap, radius, m)
    for _ in range(max_doublings):
        radius *= 2
        est = _ring_coefficients(fmap, radius, m)
        scale = max(1.0, *(abs(v) for v in est))
        if max(abs(a - b) for a, b in zip(est, prev)) <= 1e-9 * scale:
            return est
        prev = est
    return prev


def gauge_normalizer(f_int: ConformalMap, f_ext: ConformalMap) -> MoebiusMap:
    """Moebius ``T`` putting the pair ``(T o f_int, T o f_ext)`` in the solver's normalisation."""
    a = complex(f_int(0j))
    b = complex(f_ext(INFINITY))
    if np.isinf(b):
        lam, _, _ = far_field(f_ext)
        return MoebiusMap.affine(1 / lam, -a / lam)
    _, _, beta = far_field(f_ext)
    kappa = beta / (b - a)
    return MoebiusMap(kappa, -kappa * a, 1, -b)
