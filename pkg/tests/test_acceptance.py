"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the report lines.
"""
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from weldfactor import (AnalyticCurve, BoundaryCorrespondence, BoundaryDatum, FactorizationProblem,
                        FactorizeOptions, FixtureSpec, MoebiusMap, WeldingProblem, exact_polynomial_curve,
                        factorize, make_fixture, riemann_exterior, riemann_interior, solve_welding,
                        verify_factorization, verify_injective)
from weldfactor.confmap import as_curve_image
from weldfactor.curves import uniform_nodes
from weldfactor.factorize import boundary_images, match_components, matching_distances
from weldfactor.welding import gauge_normalizer

TOL = 1e-8


def report(criterion, ok, **measured):
    detail = " ".join(f"{k}={v:.3e}" if isinstance(v, float) else f"{k}={v}" for k, v in measured.items())
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
    return ok


def padded_error(coeffs, exact, upto):
    """Max coefficient error over indices 0..upto; truncated coefficients count as zero."""
    a = np.zeros(upto + 1, dtype=complex)
    b = np.zeros(upto + 1, dtype=complex)
    a[:min(len(coeffs), upto + 1)] = coeffs[:upto + 1]
    b[:min(len(exact), upto + 1)] = exact[:upto + 1]
    return float(np.abs(a - b).max())


def interior_fixture_error(order, upto=64):
    curve, exact = exact_polynomial_curve({1: 1.0, 2: 0.2})
    sol = riemann_interior(curve, 0j, order=order)
    return padded_error(sol.map.coeffs, exact.coeffs, upto)


def exterior_fixture_error(order, upto=64):
    curve, exact = exact_polynomial_curve({1: 1.0, -1: 0.3})
    sol = riemann_exterior(curve, order=order)
    lam_err = abs(sol.map.lam - exact.lam)
    return max(lam_err, padded_error(sol.map.coeffs, exact.coeffs, upto))


def best_fit_circle_defect(z):
    """Algebraic least-squares circle through ``z``; max radial deviation."""
    x, y = z.real, z.imag
    a = np.stack([x, y, np.ones_like(x)], axis=1)
    sol, *_ = np.linalg.lstsq(a, x ** 2 + y ** 2, rcond=None)
    cx, cy = sol[0] / 2, sol[1] / 2
    r = np.sqrt(sol[2] + cx ** 2 + cy ** 2)
    return float(np.abs(np.abs(z - (cx + 1j * cy)) - r).max())


# ---------------------------------------------------------------- 1

@pytest.mark.parametrize("side", ["interior", "exterior"])
def test_c1_riemann_oracle(side):
    t0 = time.perf_counter()
    err = interior_fixture_error(64) if side == "interior" else exterior_fixture_error(64)
    dt = time.perf_counter() - t0
    ok = report(f"1 ({side})", err < 1e-8 and dt < 5.0, coefficient_error=err, seconds=dt)
    assert ok


# ---------------------------------------------------------------- 2

def test_c2_welding_identity():
    t0 = time.perf_counter()
    sol = solve_welding(WeldingProblem(BoundaryCorrespondence.identity()))
    dt = time.perf_counter() - t0
    t = uniform_nodes(1024)
    z = np.exp(1j * t)
    circle = float(np.abs(sol.weld_curve(t) - z).max())
    maps = max(float(np.abs(sol.f_int(0.7 * z) - 0.7 * z).max()),
               float(np.abs(sol.f_ext(1.5 * z) - 1.5 * z).max()))
    err = max(circle, maps)
    ok = report(2, err < 1e-10 and dt < 1.0, unit_circle_gap=circle, map_gap=maps, seconds=dt)
    assert ok


# ---------------------------------------------------------------- 3

def moebius_phi():
    def eta(t):
        z = np.exp(1j * t)
        return np.unwrap(np.angle((z - 0.3) / (1 - 0.3 * z)))
    return BoundaryCorrespondence.from_function(eta, 48)


def test_c3_welding_moebius():
    sol = solve_welding(WeldingProblem(moebius_phi()))
    defect = best_fit_circle_defect(sol.weld_curve(uniform_nodes(2048)))
    ok = report(3, defect < 1e-8, circle_defect=defect, residual=sol.residual)
    assert ok


# ---------------------------------------------------------------- 4

def ellipse_round_trip():
    gamma0, exact = exact_polynomial_curve({1: 1.0, -1: 0.3})
    r = riemann_interior(gamma0, 0j, order=224)
    q = riemann_exterior(gamma0, order=64)
    phi = q.correspondence.inverse().compose(r.correspondence)
    sol = solve_welding(WeldingProblem(phi))
    return gamma0, r, q, sol


def test_c4_welding_round_trip():
    t0 = time.perf_counter()
    gamma0, r, q, sol = ellipse_round_trip()
    dt = time.perf_counter() - t0
    # gauge that takes the true pair (r, q) to the solver's normalisation
    gauge = gauge_normalizer(r.map, q.map)
    truth, _ = as_curve_image(gauge, gamma0, 8)
    weld_ext = sol.f_ext.boundary_curve()
    order = max(truth.order, weld_ext.order)
    err = float(np.abs(truth.padded(order) - weld_ext.padded(order)).max())
    ok = report(4, err < 1e-6 and dt < 10.0, coefficient_error=err, residual=sol.residual, seconds=dt)
    assert ok


# ---------------------------------------------------------------- 5, 6

@pytest.mark.parametrize("n,seed", [(2, 7), (3, 11)])
def test_c5_c6_factorisation(n, seed):
    fix = make_fixture(FixtureSpec(n=n, seed=seed, order=64))
    problem = fix.problem
    t0 = time.perf_counter()
    res = factorize(problem, FactorizeOptions(order=64))
    dt = time.perf_counter() - t0
    samples = problem.interior_samples
    err = float(np.abs(np.asarray(res(samples[:, 0])) - samples[:, 1]).max())
    certified = [f.domain is not None and f.domain.n == 1 and verify_injective(f, f.domain).passed
                 for f in res.factors]
    ok5 = (len(res.factors) == n and all(certified) and samples.shape[0] >= 200
           and err < 1e-6 and dt < 60.0)
    report(f"5 (N={n})", ok5, factors=len(res.factors), certified=all(certified),
           samples=samples.shape[0], max_error=err, seconds=dt)
    ladder = list(range(n, 0, -1))
    ok6 = res.curve_counts[:-1] == ladder and res.curve_counts[-1] == 0
    report(f"6 (N={n})", ok6, curve_counts=res.curve_counts)
    assert ok5 and ok6


# ---------------------------------------------------------------- 7

@pytest.mark.parametrize("n,seed", [(2, 7), (3, 11), (3, 5), (4, 2)])
def test_c7_matching(n, seed):
    fix = make_fixture(FixtureSpec(n=n, seed=seed, order=64))
    p = fix.problem
    images = boundary_images(p.domain, p.interior_samples)
    perm = match_components(p.domain, images, p.targets)
    d = matching_distances(images, p.targets)
    margins = []
    for i in range(n):
        row = np.sort(d[i])
        margins.append(np.inf if row[0] == 0 else row[1] / row[0])
    bijective = sorted(perm) == list(range(n))
    ok = perm == tuple(fix.permutation) and bijective and min(margins) >= 10
    report(f"7 (N={n}, seed={seed})", ok, recovered=list(perm), recorded=list(fix.permutation),
           min_margin=float(min(margins)))
    assert ok


# ---------------------------------------------------------------- 8

def moebius_gauged(problem, m, order):
    data = []
    for b in problem.boundary_data:
        img, defect = as_curve_image(m, b.target, max(order, b.target.order))
        assert defect < 1e-10 * img.diameter
        data.append(BoundaryDatum(img, b.correspondence))
    s = problem.interior_samples
    samples = np.stack([s[:, 0], np.asarray(m(s[:, 1]))], axis=1)
    return FactorizationProblem(problem.domain, data, samples)


def test_c8_gauge_robustness(fixture2, result2):
    m = MoebiusMap(1.5 - 0.5j, 0.3, 0.02j, 1.0)
    gauged = moebius_gauged(fixture2.problem, m, 64)
    res = factorize(gauged, FactorizeOptions(order=64, tol=TOL))
    base = verify_factorization(result2, fixture2.problem)
    moved = verify_factorization(res, gauged)
    keys = ["max_interior_error", "mean_interior_error", "max_boundary_defect", "moebius_residual"]
    shifts = {k: abs(moved[k] - base[k]) for k in keys}
    ok = (max(shifts.values()) <= 10 * TOL and moved["all_injective"] == base["all_injective"]
          and moved["curve_counts"] == base["curve_counts"] and moved["n_factors"] == base["n_factors"])
    report(8, ok, max_metric_shift=max(shifts.values()), limit=10 * TOL)
    assert ok


# ---------------------------------------------------------------- 9

@pytest.mark.xfail(strict=True, reason="both fixtures are finite series, exact to rounding already at order 32")
def test_c9_spectral_convergence():
    """Literal check on the exact polynomial fixtures.

    Both generating maps are finite series, so the order-32 solve is already
    exact to rounding and no further reduction is possible; this is not
    expected to pass and is recorded as a known blocker.
    """
    ratios = {}
    for side, fn in (("interior", interior_fixture_error), ("exterior", exterior_fixture_error)):
        e32, e64 = fn(32), fn(64)
        ratios[side] = e32 / max(e64, 1e-300)
        report(f"9 ({side})", ratios[side] >= 1e2, error_32=e32, error_64=e64, reduction=ratios[side])
    assert min(ratios.values()) >= 1e2


def test_c9_supplement_spectral_convergence_nonpolynomial():
    """Same order doubling on zeta/(1-0.7 zeta), whose coefficients never terminate."""
    a = 0.7
    k = np.arange(200)
    exact = np.where(k >= 1, a ** (k - 1.0), 0.0)
    curve = AnalyticCurve(exact, 0, 1)
    errs = {}
    for order in (32, 64):
        sol = riemann_interior(curve, 0j, order=order, tol=1e-4 * curve.diameter)
        errs[order] = padded_error(sol.map.coeffs, exact, 64)
    ratio = errs[32] / errs[64]
    ok = report("9 (supplement)", ratio >= 1e2, error_32=errs[32], error_64=errs[64], reduction=ratio)
    assert ok


# ---------------------------------------------------------------- 10

def _cli(args, cwd, threads):
    env = dict(os.environ, WELDFACTOR_THREADS=str(threads))
    proc = subprocess.run([sys.executable, "-m", "weldfactor.cli", *args], cwd=cwd, env=env,
                          capture_output=True, text=True, timeout=600)
    assert proc.returncode == 0, proc.stderr
    return proc


def test_c10_determinism(tmp_path):
    outputs = {}
    for run, threads in (("a", 1), ("b", 1), ("c", 2)):
        d = tmp_path / run
        d.mkdir()
        _cli(["fixture", "--n", "2", "--seed", "7", "-o", "p.json", "--deterministic"], d, threads)
        _cli(["factor", "p.json", "-o", "r.json", "--deterministic"], d, threads)
        _cli(["verify", "r.json", "p.json", "-o", "m.json", "--deterministic"], d, threads)
        _cli(["plot", "r.json", "-o", "r.svg", "--deterministic"], d, threads)
        outputs[run] = {f.name: f.read_bytes() for f in sorted(d.iterdir())}
    same = all(outputs[r] == outputs["a"] for r in ("b", "c"))
    ok = report(10, same and len(outputs["a"]) == 5, files=sorted(outputs["a"]), identical=same)
    assert ok
