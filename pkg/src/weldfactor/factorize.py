"""Factor a conformal map of an N-holed domain into N maps of simply connected domains.

Each peel step glues the domain side of one source curve to the filled-in
target hole along the boundary values of the current map and uniformises the
result by a welding solve.  The uniformising map on the source side is the
new factor; pushing the remaining curves forward leaves a map with one hole
fewer and the same boundary values.  After the last step the remaining map has
no holes left and is a Moebius map, which is fitted and absorbed into ``g_1``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .confmap import (BoundaryCorrespondence, CompositeMap, ConformalMap, InverseMap,
                      MoebiusMap, as_curve_image, compose, fit_moebius, verify_injective)
from .curves import INFINITY, AnalyticCurve, DomainSpec, is_infinite, uniform_nodes, validate_domain
from .errors import (AmbiguousMatch, BadNormalization, DomainInvalid, NoConvergence,
                     NonMonotoneInput, NotBijective, ProjectionDefect, WeldFactorError)
from .riemann import DEFAULT_ORDER, riemann_exterior, riemann_interior
from .welding import DEFAULT_TOL as WELD_TOL
from .welding import WeldingProblem, solve_welding

MATCH_MARGIN = 10.0
MATCH_SAMPLES = 8


@dataclass
class BoundaryDatum:
    """Boundary values of ``G`` on one source curve: ``G(source(t)) = target(w(t))``."""

    target: AnalyticCurve
    correspondence: BoundaryCorrespondence


@dataclass
class FactorizationProblem:
    """Domain ``U``, boundary data and optional ``(z, G(z))`` verification pairs.

    The boundary data entries need not be listed in source-curve order;
    :func:`match_components` pairs them up.
    """

    domain: DomainSpec
    boundary_data: list
    interior_samples: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=complex))
    target_base_point: complex | None = None

    def __post_init__(self):
        s = np.asarray(self.interior_samples, dtype=complex)
        self.interior_samples = s.reshape(-1, 2)
        self.boundary_data = list(self.boundary_data)

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def targets(self) -> DomainSpec:
        base = INFINITY if self.target_base_point is None else self.target_base_point
        return DomainSpec([b.target for b in self.boundary_data], base_point=base)

    def check(self) -> None:
        """Raise :class:`DomainInvalid` or :class:`NonMonotoneInput` on a broken problem."""
        if len(self.boundary_data) != self.domain.n:
            raise DomainInvalid(f"{self.domain.n} source curves but {len(self.boundary_data)} boundary data")
        report = validate_domain(self.domain)
        if not report.accepted:
            raise DomainInvalid("source domain invalid: " + ", ".join(c.name for c in report.failures()))
        tdom = self.targets
        if self.target_base_point is None:
            # the base point is only needed to pin down the target side
            checks = [c for c in validate_domain(tdom).checks if c.name != "base_point"]
        else:
            checks = validate_domain(tdom).checks
        bad = [c.name for c in checks if not c.passed]
        if bad:
            raise DomainInvalid("target domain invalid: " + ", ".join(bad))
        for j, b in enumerate(self.boundary_data):
            if not b.correspondence.is_monotone():
                raise NonMonotoneInput(f"boundary correspondence {j} is not monotone")


@dataclass
class FactorizeOptions:
    order: int = DEFAULT_ORDER
    tol: float = 1e-8
    peel_order: Sequence[int] | None = None
    welding_tol: float = WELD_TOL


@dataclass
class PeelState:
    """Current curves, their targets and correspondences, with the factors peeled so far."""

    curves: list
    targets: list
    correspondences: list
    labels: list
    factors: list = field(default_factory=list)
    history: list = field(default_factory=list)
    base_point: complex = INFINITY

    def __post_init__(self):
        if not (len(self.curves) == len(self.targets) == len(self.correspondences) == len(self.labels)):
            raise ValueError("peel state lists must have equal length")

    @property
    def n(self) -> int:
        return len(self.curves)

    @property
    def domain(self) -> DomainSpec:
        return DomainSpec(self.curves, base_point=self.base_point)


@dataclass
class FactorizationResult:
    """Factors ``g_1 .. g_N`` with ``G = g_1 o ... o g_N`` on the domain."""

    factors: list
    permutation: tuple
    peel_order: tuple
    curve_counts: list
    diagnostics: list
    moebius: MoebiusMap
    moebius_residual: float
    chart: tuple = (None, None)

    def composed(self) -> CompositeMap:
        return compose(self.factors, flatten=False)

    def __call__(self, z):
        return self.composed()(z)


# ---------------------------------------------------------------- matching

def matching_distances(images: Sequence[np.ndarray], targets: DomainSpec) -> np.ndarray:
    """``d[i, j]``: max over image samples of source ``i`` of the distance to target trace ``j``."""
    d = np.zeros((len(images), targets.n))
    for i, pts in enumerate(images):
        pts = np.asarray(pts, dtype=complex)
        for j, c in enumerate(targets.curves):
            d[i, j] = float(c.distance_to(pts).max()) if pts.size else math.inf
    return d


def match_components(domain: DomainSpec, images: Sequence[np.ndarray], targets: DomainSpec) -> tuple:
    """Permutation ``perm`` with ``perm[i]`` the target curve that the image of source curve ``i`` hugs.

    Raises :class:`AmbiguousMatch` when the runner-up target is not at least
    ten times further away than the winner, and :class:`NotBijective` when two
    sources pick the same target.
    """
    if len(images) != domain.n or targets.n != domain.n:
        raise NotBijective(f"{domain.n} sources, {len(images)} image sets, {targets.n} targets")
    d = matching_distances(images, targets)
    perm = []
    for i in range(domain.n):
        order = np.argsort(d[i], kind="stable")
        best = d[i, order[0]]
        if not np.isfinite(best):
            raise AmbiguousMatch(f"no image samples for source curve {i}")
        if order.size > 1:
            second = d[i, order[1]]
            margin = math.inf if best == 0 else second / best
            if margin < MATCH_MARGIN:
                raise AmbiguousMatch(f"source curve {i}: separation margin {margin:.2f} < {MATCH_MARGIN}")
        perm.append(int(order[0]))
    if len(set(perm)) != len(perm):
        raise NotBijective(f"assignment {perm} is not a permutation")
    return tuple(perm)


def boundary_images(domain: DomainSpec, samples: np.ndarray, per_curve: int = MATCH_SAMPLES) -> list:
    """Image values of the ``per_curve`` samples nearest each source curve."""
    samples = np.asarray(samples, dtype=complex).reshape(-1, 2)
    z, gz = samples[:, 0], samples[:, 1]
    finite = ~np.isinf(z) & ~np.isinf(gz)
    z, gz = z[finite], gz[finite]
    out = []
    for c in domain.curves:
        if z.size == 0:
            out.append(np.zeros(0, complex))
            continue
        dist = c.distance_to(z)
        out.append(gz[np.argsort(dist, kind="stable")[:per_curve]])
    return out


def match_problem(problem: FactorizationProblem) -> tuple:
    if problem.interior_samples.shape[0] == 0:
        return tuple(range(problem.n))
    images = boundary_images(problem.domain, problem.interior_samples)
    return match_components(problem.domain, images, problem.targets)


# ---------------------------------------------------------------- peel step

def _inner_point(curve: AnalyticCurve) -> complex:
    """A point well inside the bounded side of ``curve``."""
    c0 = curve.coefficient(0)
    pts = curve.samples()
    if curve.winding(c0)[0] != 0 and float(curve.distance_to(c0)[0]) > 0.1 * curve.diameter:
        return c0
    lo, hi = pts.real.min(), pts.real.max()
    lo_i, hi_i = pts.imag.min(), pts.imag.max()
    gx, gy = np.meshgrid(np.linspace(lo, hi, 41), np.linspace(lo_i, hi_i, 41))
    grid = (gx + 1j * gy).ravel()
    inside = grid[curve.winding(grid) != 0]
    if inside.size == 0:
        raise BadNormalization("could not find an interior point")
    return complex(inside[np.argmax(curve.distance_to(inside))])


def _resolved(solve, order: int, growth: int = 3):
    """Run ``solve(order)``, doubling the order while it stalls on its truncation floor."""
    for step in range(growth):
        try:
            return solve(order << step), order << step
        except NoConvergence:
            if step == growth - 1:
                raise


def _direct_phi(q_corr, w, r_corr, theta):
    # psi = sigma_q^{-1}( w^{-1}( sigma_r(theta) ) ) by pointwise inversion
    return q_corr.solve(w.solve(r_corr(theta)))


def peel_factor(state: PeelState, index: int, options: FactorizeOptions | None = None) -> tuple:
    """Peel the curve at position ``index``; returns ``(factor, new_state)``.

    The factor ``F_ext o q^{-1}`` is conformal on the domain side of the
    curve, and the remaining curves are pushed forward through it with their
    parameterisations (hence their correspondences) unchanged.
    """
    opts = options or FactorizeOptions()
    order = opts.order
    if state.n < 1:
        raise DomainInvalid("nothing left to peel")
    src = state.curves[index]
    tgt = state.targets[index]
    w = state.correspondences[index]
    label = state.labels[index]
    if src.hole_contains_infinity or tgt.hole_contains_infinity:
        raise DomainInvalid("peel needs bounded holes; normalise the charts first")
    t0 = time.perf_counter()
    ctx = f"peel of curve {label} (n={state.n})"
    try:
        centre = _inner_point(tgt)
        r, r_order = _resolved(lambda k: riemann_interior(tgt, centre, order=k), order)
        q, q_order = _resolved(lambda k: riemann_exterior(src, order=k), order)
        k_phi = max(r_order, q_order, w.order)
        w_inv = w.inverse(k_phi)
        phi = q.correspondence.inverse(k_phi).compose(w_inv.compose(r.correspondence, k_phi), k_phi)
        if phi.direction != 1:
            raise NonMonotoneInput(f"{ctx}: gluing map reverses orientation")
        tm = uniform_nodes(4 * order) + np.pi / (4 * order)
        phi_defect = float(np.abs(phi(tm) - _direct_phi(q.correspondence, w, r.correspondence, tm)).max())
        weld = solve_welding(WeldingProblem(phi, tol=opts.welding_tol))
    except WeldFactorError as exc:
        exc.args = (f"{ctx}: {exc}",) + exc.args[1:]
        raise
    dom = DomainSpec([src], base_point=state.base_point)
    factor = CompositeMap((weld.f_ext, InverseMap(q.map)), domain=dom)
    report = verify_injective(factor, dom)
    if not report.passed:
        raise NoConvergence(f"{ctx}: factor failed injectivity certification ({report.detail})")

    curves, defects = [], {}
    for j, c in enumerate(state.curves):
        if j == index:
            continue
        pushed, defect = as_curve_image(factor, c, max(order, c.order))
        rel = defect / pushed.diameter
        defects[state.labels[j]] = rel
        if rel > opts.tol or not pushed.is_valid():
            raise ProjectionDefect(f"{ctx}: pushed curve {state.labels[j]} projection defect {rel:.3e}")
        curves.append(pushed)
    keep = [j for j in range(state.n) if j != index]
    diag = {
        "label": label,
        "n_before": state.n,
        "welding_residual": weld.residual,
        "welding_order": weld.f_int.order,
        "riemann_orders": [r_order, q_order],
        "riemann_interior_residual": r.residual,
        "riemann_interior_iterations": r.iterations,
        "riemann_exterior_residual": q.residual,
        "riemann_exterior_iterations": q.iterations,
        "phi_defect": phi_defect,
        "projection_defects": defects,
        "injectivity": report.as_dict(),
        "seconds": time.perf_counter() - t0,
    }
    new_state = PeelState(
        curves=curves,
        targets=[state.targets[j] for j in keep],
        correspondences=[state.correspondences[j] for j in keep],
        labels=[state.labels[j] for j in keep],
        factors=[factor] + list(state.factors),
        history=list(state.history) + [diag],
        base_point=state.base_point,
    )
    return factor, new_state


# ---------------------------------------------------------------- driver

def _safe_point(curves: Sequence[AnalyticCurve], candidates: np.ndarray) -> complex | None:
    dom = DomainSpec(curves)
    cand = np.asarray(candidates, dtype=complex)
    cand = cand[~np.isinf(cand)]
    keep = np.ones(cand.size, dtype=bool)
    for c in curves:
        keep &= c.domain_side(cand)
    cand = cand[keep]
    if cand.size == 0:
        return None
    clear = np.min([c.distance_to(cand) for c in dom.curves], axis=0)
    return complex(cand[np.argmax(clear)])


def _charts(problem: FactorizationProblem, targets: list) -> tuple:
    """Moebius charts ``S`` (source) and ``T`` (target) after which every hole is bounded."""
    S = T = None
    base = problem.domain.base_point
    if any(c.hole_contains_infinity for c in problem.domain.curves):
        if is_infinite(base):
            raise DomainInvalid("a hole contains infinity but the base point is infinity")
        S = MoebiusMap(0, 1, 1, -base)
    if any(c.hole_contains_infinity for c in targets):
        tb = problem.target_base_point
        if tb is None or is_infinite(tb):
            tb = _safe_point(targets, problem.interior_samples[:, 1])
        if tb is None:
            raise DomainInvalid("target domain is bounded; a target base point is needed")
        T = MoebiusMap(0, 1, 1, -tb)
    return S, T


def _to_chart(m: MoebiusMap | None, curve: AnalyticCurve, order: int, tol: float) -> AnalyticCurve:
    if m is None:
        return curve
    img, defect = as_curve_image(m, curve, max(order, curve.order))
    if defect > tol * img.diameter:
        raise ProjectionDefect(f"chart change of a curve leaves projection defect {defect / img.diameter:.3e}")
    return img


def factorize(problem: FactorizationProblem, options: FactorizeOptions | None = None) -> FactorizationResult:
    """Factors ``g_1 .. g_N`` of ``G`` with ``G = g_1 o ... o g_N`` on the domain."""
    opts = options or FactorizeOptions()
    problem.check()
    n = problem.n
    perm = match_problem(problem)
    data = [problem.boundary_data[perm[i]] for i in range(n)]
    targets = [b.target for b in data]
    S, T = _charts(problem, targets)
    curves = [_to_chart(S, c, opts.order, opts.tol) for c in problem.domain.curves]
    targets = [_to_chart(T, c, opts.order, opts.tol) for c in targets]
    state = PeelState(curves, targets, [b.correspondence for b in data], list(range(n)),
                      base_point=INFINITY)

    order = list(opts.peel_order) if opts.peel_order is not None else list(range(n))[::-1]
    if sorted(order) != list(range(n)):
        raise DomainInvalid(f"peel order {order} is not a permutation of 0..{n - 1}")
    counts = [state.n]
    last = None
    for label in order:
        idx = state.labels.index(label)
        if state.n == 1:
            last = (state.curves[0], state.targets[0], state.correspondences[0])
        try:
            _, state = peel_factor(state, idx, opts)
        except WeldFactorError as exc:
            exc.diagnostics = dict(getattr(exc, "diagnostics", None) or {}, steps=state.history,
                                   curve_counts=counts)
            raise
        counts.append(state.n)

    # the leftover map has no holes: fit a Moebius map on the last seam
    src, tgt, w = last
    m = max(16, 4 * opts.order)
    t = uniform_nodes(m)
    g1 = state.factors[0]
    x = np.asarray(g1(src(t)))
    y = tgt(w(t))
    mob, resid = fit_moebius(x, y)
    rel = resid / tgt.diameter
    if rel > opts.tol:
        raise NoConvergence(f"leftover map is not Moebius (fit residual {rel:.3e})",
                            diagnostics={"steps": state.history, "moebius_residual": rel,
                                         "curve_counts": counts})

    factors = list(state.factors)
    outer = mob if T is None else mob.then(T.inverse())
    factors[0] = CompositeMap((outer,) + _parts(factors[0]), domain=factors[0].domain)
    if S is not None:
        orig = problem.domain
        last_src = state.history[0]["label"]
        factors[-1] = CompositeMap(_parts(factors[-1]) + (S,),
                                   domain=DomainSpec([orig.curves[last_src]], base_point=orig.base_point))
    return FactorizationResult(factors, perm, tuple(order), counts, state.history, mob, rel, (S, T))


def _parts(f: ConformalMap) -> tuple:
    return f.factors if isinstance(f, CompositeMap) else (f,)


def corrupt_factor(result: FactorizationResult, index: int, delta: float) -> FactorizationResult:
    """Copy of ``result`` with the first series coefficient of factor ``index`` shifted by ``delta``."""
    from .confmap import LaurentSeriesMap
    f = result.factors[index]
    parts = list(_parts(f))
    for k, p in enumerate(parts):
        if isinstance(p, LaurentSeriesMap):
            c = np.array(p.coeffs)
            c[0] += delta
            parts[k] = LaurentSeriesMap(p.lam, c, domain=p.domain)
            break
    factors = list(result.factors)
    factors[index] = CompositeMap(tuple(parts), domain=f.domain)
    return FactorizationResult(factors, result.permutation, result.peel_order, result.curve_counts,
                               result.diagnostics, result.moebius, result.moebius_residual, result.chart)


def verify_factorization(result: FactorizationResult, problem: FactorizationProblem,
                         *, injectivity: bool = True) -> dict:
    """Interior, boundary and per-factor injectivity metrics; never raises on large errors."""
    comp = result.composed()
    metrics = {"n_factors": len(result.factors)}
    s = problem.interior_samples
    if s.shape[0]:
        try:
            err = np.abs(np.asarray(comp(s[:, 0])) - s[:, 1])
            metrics["max_interior_error"] = float(np.max(err))
            metrics["mean_interior_error"] = float(np.mean(err))
        except WeldFactorError as exc:
            metrics["max_interior_error"] = math.inf
            metrics["mean_interior_error"] = math.inf
            metrics["interior_failure"] = str(exc)
    boundary = []
    t = uniform_nodes(256)
    for i, c in enumerate(problem.domain.curves):
        b = problem.boundary_data[result.permutation[i]]
        try:
            d = float(np.abs(np.asarray(comp(c(t))) - b.target(b.correspondence(t))).max())
        except WeldFactorError:
            d = math.inf
        boundary.append(d / b.target.diameter)
    metrics["boundary_defects"] = boundary
    metrics["max_boundary_defect"] = float(max(boundary)) if boundary else 0.0
    if injectivity:
        reports = [verify_injective(f, f.domain).as_dict() for f in result.factors]
        metrics["injectivity"] = reports
        metrics["all_injective"] = all(r["passed"] for r in reports)
    metrics["moebius_residual"] = result.moebius_residual
    metrics["curve_counts"] = list(result.curve_counts)
    return metrics
