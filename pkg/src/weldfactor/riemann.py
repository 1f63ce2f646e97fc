"""Riemann maps of the unit disk (or its exterior) onto the sides of analytic curves.

Both solvers collocate ``f(exp(i theta_j)) = gamma(sigma_j)`` and solve for the
series coefficients of ``f`` and the boundary parameters ``sigma_j`` jointly by
damped Gauss-Newton.  When the cold start fails the curve is deformed
continuously from a circle and the solve is warm-started stage by stage.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .confmap import (BoundaryCorrespondence, InjectivityReport, LaurentSeriesMap,
                      PowerSeriesMap, project_to_curve, verify_injective)
from .curves import INFINITY, AnalyticCurve, DomainSpec, uniform_nodes
from .errors import BadNormalization, DomainInvalid, NoConvergence
from .solver import NewtonResult, gauss_newton

DEFAULT_ORDER = 64
TOL_RIEMANN_REL = 1e-9
FLOOR_REL = 1e-14
MAX_NEWTON = 60
MAX_STAGES = 8

UNIT_DISK = DomainSpec([AnalyticCurve.circle(0, 1, orientation=1)], base_point=0)
UNIT_EXTERIOR = DomainSpec([AnalyticCurve.circle(0, 1, orientation=-1)], base_point=INFINITY)


@dataclass
class RiemannSolution:
    map: PowerSeriesMap | LaurentSeriesMap
    correspondence: BoundaryCorrespondence
    residual: float
    iterations: int = 0
    stages: int = 0
    history: list = field(default_factory=list)
    injectivity: InjectivityReport | None = None


class _Problem:
    """Unknown layout and residual/Jacobian for one side."""

    def __init__(self, curve: AnalyticCurve, order: int, interior: bool, centre: complex):
        self.curve = curve
        self.K = order
        self.interior = interior
        self.centre = centre
        self.M = 2 * order + 1 if interior else 2 * order + 4
        self.theta = uniform_nodes(self.M)
        e = np.exp(1j * self.theta)
        if interior:
            # columns a_1 .. a_K
            self.basis = e[:, None] ** np.arange(1, order + 1)[None, :]
        else:
            # columns lam, c_0, c_-1 .. c_-K
            self.basis = np.concatenate([e[:, None], np.conj(e)[:, None] ** np.arange(0, order + 1)[None, :]], axis=1)
        self.nc = 2 * self.basis.shape[1] - 1

    def coeffs(self, x):
        # first coefficient is real by normalisation
        head = x[:1].astype(complex)
        rest = x[1:self.nc].reshape(-1, 2)
        return np.concatenate([head, rest[:, 0] + 1j * rest[:, 1]])

    def pack(self, coeffs, sigma):
        rest = np.stack([coeffs[1:].real, coeffs[1:].imag], axis=1).ravel()
        return np.concatenate([[coeffs[0].real], rest, sigma])

    def values(self, x):
        v = self.basis @ self.coeffs(x)
        return v + self.centre if self.interior else v

    def residual(self, x):
        r = self.values(x) - self.curve(x[self.nc:])
        return np.concatenate([r.real, r.imag])

    def jacobian(self, x):
        cols = [self.basis[:, :1]]
        for j in range(1, self.basis.shape[1]):
            cols.append(self.basis[:, j:j + 1])
            cols.append(1j * self.basis[:, j:j + 1])
        jc = np.concatenate(cols + [np.diag(-self.curve.derivative(x[self.nc:]))], axis=1)
        return np.concatenate([jc.real, jc.imag], axis=0)


def _polar_sigma(curve: AnalyticCurve, about: complex, targets: np.ndarray) -> np.ndarray | None:
    """Curve parameters whose polar angle about ``about`` equals ``targets``; ``None`` if not starlike."""
    s = uniform_nodes(4096)
    ang = np.unwrap(np.angle(curve(s) - about))
    if np.any(np.diff(ang) <= 0):
        return None
    ang_ext = np.concatenate([ang - 2 * np.pi, ang, ang + 2 * np.pi])
    s_ext = np.concatenate([s - 2 * np.pi, s, s + 2 * np.pi])
    tgt = ang[0] + np.mod(targets - ang[0], 2 * np.pi)
    sig = np.interp(tgt, ang_ext, s_ext)
    # keep sigma continuous in theta
    return np.unwrap(sig)


def _cold_start(prob: _Problem) -> np.ndarray:
    """Polar-angle parameterisation about the centre gives ``f'(0) ~ real positive``."""
    curve, theta = prob.curve, prob.theta
    about = prob.centre if prob.interior else curve.coefficient(0)
    sigma = _polar_sigma(curve, about, theta)
    if sigma is None:
        sigma = theta - np.angle(curve.coefficient(1))
    c = np.fft.fft(curve(sigma)) / prob.M
    if prob.interior:
        coeffs = c[1:prob.K + 1].copy()
    else:
        coeffs = np.concatenate([[c[1]], c[-np.arange(0, prob.K + 1) % prob.M]])
    coeffs[0] = abs(coeffs[0])
    return prob.pack(coeffs, sigma)


def _circle_through(curve: AnalyticCurve, centre: complex) -> AnalyticCurve:
    c1 = curve.coefficient(1)
    radius = float(np.mean(np.abs(curve.samples() - centre)))
    return AnalyticCurve([centre, radius * c1 / abs(c1)], k_min=0, orientation=curve.orientation)


def _blend(a: AnalyticCurve, b: AnalyticCurve, t: float) -> AnalyticCurve:
    order = max(a.order, b.order)
    return AnalyticCurve((1 - t) * a.padded(order) + t * b.padded(order), -order, b.orientation)


def _accepted(prob: _Problem, res: NewtonResult) -> bool:
    # near-square collocation can interpolate with folded boundary parameters; those are spurious
    return res.converged and bool(np.all(np.diff(res.x[prob.nc:]) > 0))


def _solve(curve: AnalyticCurve, order: int, interior: bool, centre: complex,
           tol: float, max_iter: int, max_stages: int) -> tuple[_Problem, NewtonResult, int]:
    floor = FLOOR_REL * curve.diameter
    prob = _Problem(curve, order, interior, centre)
    res = gauss_newton(prob.residual, prob.jacobian, _cold_start(prob),
                       tol=tol, floor=floor, max_iter=max_iter)
    if _accepted(prob, res):
        return prob, res, 0
    # deform from a circle with the same centre
    start = _circle_through(curve, centre if interior else curve.coefficient(0))
    stage_curve = start
    p0 = _Problem(stage_curve, order, interior, centre)
    x = _cold_start(p0)
    total = 0
    for k in range(1, max_stages + 1):
        t = k / max_stages
        stage_curve = _blend(start, curve, t)
        pk = _Problem(stage_curve, order, interior, centre)
        res = gauss_newton(pk.residual, pk.jacobian, x, tol=tol, floor=floor, max_iter=max_iter)
        total += res.iterations
        if not _accepted(pk, res):
            raise NoConvergence(f"Riemann map continuation failed at stage {k}/{max_stages}",
                                stage=k, diagnostics={"residual": res.residual})
        x = res.x
    res.iterations = total
    return pk, res, max_stages


def _off_node_defect(curve: AnalyticCurve, fmap, sigma: np.ndarray, order: int) -> float:
    """Distance of ``fmap(e^{it})`` from the trace on a grid 4x denser than collocation, off the nodes."""
    m = 4 * sigma.size
    t = uniform_nodes(m) + np.pi / m
    corr = BoundaryCorrespondence.from_samples(sigma, order, 1)
    w = np.asarray(fmap(np.exp(1j * t)))
    s = project_to_curve(curve, w, guess=corr(t))
    return float(np.abs(curve(s) - w).max())


def _finish(prob: _Problem, res: NewtonResult, stages: int, flipped: bool,
            certify: bool, tol: float) -> RiemannSolution:
    coeffs = prob.coeffs(res.x)
    sigma = res.x[prob.nc:]
    if prob.interior:
        fmap = PowerSeriesMap(np.concatenate([[prob.centre], coeffs]), domain=UNIT_DISK)
    else:
        fmap = LaurentSeriesMap(coeffs[0].real, coeffs[1:], domain=UNIT_EXTERIOR)
    # node residuals can vanish while the series is still truncated (e.g. symmetric curves)
    defect = _off_node_defect(prob.curve, fmap, sigma, prob.K)
    if not defect < tol:
        raise NoConvergence(f"Riemann map truncated at order {prob.K}: off-node defect {defect:.3e}",
                            diagnostics={"residual": res.residual, "off_node_defect": defect})
    direction = -1 if flipped else 1
    corr = BoundaryCorrespondence.from_samples(direction * sigma, prob.K, direction)
    report = None
    if certify:
        report = verify_injective(fmap, fmap.domain)
        if not report.passed:
            raise NoConvergence(f"Riemann map failed injectivity certification: {report.detail}")
    return RiemannSolution(fmap, corr, max(res.residual, defect), res.iterations, stages, res.history, report)


def _prepare(curve: AnalyticCurve) -> tuple[AnalyticCurve, bool]:
    rep = curve.injectivity_report()
    if not rep["passed"]:
        raise DomainInvalid(f"degenerate or self-intersecting curve ({rep})")
    if curve.is_ccw:
        return curve, False
    return curve.reversed(), True


def riemann_interior(curve: AnalyticCurve, centre: complex | None = None, *,
                     order: int = DEFAULT_ORDER, tol: float | None = None,
                     max_iter: int = MAX_NEWTON, max_stages: int = MAX_STAGES,
                     certify: bool = True) -> RiemannSolution:
    """Map of the unit disk onto the bounded side of ``curve``.

    Normalised by ``f(0) = centre`` and ``f'(0) > 0``.  The correspondence
    satisfies ``f(exp(i theta)) = curve(sigma(theta))``.
    """
    work, flipped = _prepare(curve)
    centre = complex(work.coefficient(0) if centre is None else centre)
    if work.winding(centre)[0] != 1 or float(work.distance_to(centre)[0]) < 1e-9 * work.diameter:
        raise BadNormalization(f"centre {centre} is not inside the curve")
    tol = TOL_RIEMANN_REL * work.diameter if tol is None else tol
    prob, res, stages = _solve(work, order, True, centre, tol, max_iter, max_stages)
    return _finish(prob, res, stages, flipped, certify, tol)


def riemann_exterior(curve: AnalyticCurve, *, order: int = DEFAULT_ORDER, tol: float | None = None,
                     max_iter: int = MAX_NEWTON, max_stages: int = MAX_STAGES,
                     certify: bool = True) -> RiemannSolution:
    """Map of the exterior disk onto the unbounded side of ``curve``, ``f(inf) = inf``, ``lam > 0``."""
    work, flipped = _prepare(curve)
    tol = TOL_RIEMANN_REL * work.diameter if tol is None else tol
    prob, res, stages = _solve(work, order, False, 0j, tol, max_iter, max_stages)
    return _finish(prob, res, stages, flipped, certify, tol)
