import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weldfactor.confmap import (TOL_INV, BoundaryCorrespondence, CompositeMap, InverseMap,
                                LaurentSeriesMap, MoebiusMap, PowerSeriesMap, as_curve_image,
                                boundary_correspondence, compose, fit_moebius, invert_map,
                                verify_injective)
from weldfactor.curves import INFINITY, AnalyticCurve, DomainSpec, uniform_nodes
from weldfactor.errors import EmptyList, OutOfChart
from weldfactor.riemann import UNIT_DISK, UNIT_EXTERIOR

coef = st.floats(-2, 2, allow_nan=False)


@st.composite
def moebius_maps(draw):
    a, b, c, d = (complex(draw(coef), draw(coef)) for _ in range(4))
    if abs(a * d - b * c) < 1e-2:
        a, d = a + 1, d + 1
    if abs(a * d - b * c) < 1e-2:
        return MoebiusMap(1, 0, 0, 1)
    return MoebiusMap(a, b, c, d)


@st.composite
def warps(draw):
    """Monotone degree-1 circle maps with two small harmonics."""
    shift = draw(st.floats(-np.pi, np.pi))
    e1 = complex(draw(st.floats(-0.2, 0.2)), draw(st.floats(-0.2, 0.2)))
    e2 = complex(draw(st.floats(-0.1, 0.1)), draw(st.floats(-0.1, 0.1)))
    return BoundaryCorrespondence([shift, e1, e2], k_min=0)


def test_moebius_normalised_and_composed():
    m = MoebiusMap(2, 1, 1, 3)
    assert m.a * m.d - m.b * m.c == pytest.approx(1.0)
    z = np.array([0.3 + 0.1j, -2.0, 5j])
    n = MoebiusMap(0, 1, 1, 0)
    assert np.allclose(m.then(n)(z), n(m(z)))
    assert np.allclose(m.inverse()(m(z)), z)
    assert m(INFINITY) == pytest.approx(2.0)
    assert np.isinf(m(m.pole))
    with pytest.raises(ValueError):
        MoebiusMap(1, 1, 1, 1)


def test_series_evaluation():
    p = PowerSeriesMap([0.5, 1.0, 0.2], domain=UNIT_DISK)
    z = 0.4 - 0.3j
    assert p(z) == pytest.approx(0.5 + z + 0.2 * z ** 2)
    assert p.derivative(z) == pytest.approx(1 + 0.4 * z)
    ell = LaurentSeriesMap(2.0, [0.1, 0.3], domain=UNIT_EXTERIOR)
    z = 1.5 + 1j
    assert ell(z) == pytest.approx(2 * z + 0.1 + 0.3 / z)
    assert np.isinf(ell(INFINITY))


def test_compose_order_and_flatten():
    f = MoebiusMap.affine(2.0)
    g = MoebiusMap.affine(1.0, 1.0)
    h = compose([f, compose([g, f])])
    assert len(h.factors) == 3
    assert h(1.0) == pytest.approx(f(g(f(1.0))))
    with pytest.raises(EmptyList):
        compose([])


def test_inverse_map_of_series():
    p = PowerSeriesMap([0, 1.0, 0.2], domain=UNIT_DISK)
    inv = InverseMap(p)
    w = p(np.array([0.3, 0.5j, -0.6 + 0.1j]))
    assert np.allclose(inv(w), [0.3, 0.5j, -0.6 + 0.1j], atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.9), st.floats(0, 2 * np.pi))
def test_invert_then_eval_is_identity(r, t):
    ell = LaurentSeriesMap(1.0, [0.05, 0.3, 0.02j], domain=UNIT_EXTERIOR)
    z = (1.0 / r) * np.exp(1j * t)
    w = ell(z)
    back = invert_map(ell, w)
    assert abs(ell(back) - w) <= 10 * TOL_INV * max(1.0, abs(w))


@settings(max_examples=40, deadline=None)
@given(moebius_maps(), moebius_maps(), moebius_maps())
def test_compose_associative(f, g, h):
    z = np.array([0.1 + 0.2j, -0.7 + 0.05j, 0.3j])
    left = CompositeMap((f, CompositeMap((g, h))))(z)
    right = CompositeMap((CompositeMap((f, g)), h))(z)
    ok = np.isfinite(left) & np.isfinite(right) & (np.abs(left) < 1e6)
    assert np.allclose(left[ok], right[ok], rtol=1e-9, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(warps())
def test_correspondence_degree_and_monotone(w):
    t = np.linspace(-3, 3, 37)
    assert np.allclose(w(t + 2 * np.pi) - w(t), 2 * np.pi, atol=1e-12)
    assert w.is_monotone()
    s = uniform_nodes(64)
    assert np.allclose(w(w.solve(s)), s, atol=1e-12)
    inv = w.inverse(64)
    assert np.allclose(inv(w(s)), s, atol=1e-10)


def test_boundary_correspondence_of_composition():
    circle = AnalyticCurve.circle(0, 1)
    f = MoebiusMap(1, -0.3, -0.3, 1)  # disk automorphism
    g = MoebiusMap(1, 0.2j, -0.2j, 1)
    eta_f = boundary_correspondence(f, circle, circle, order=48)
    eta_g = boundary_correspondence(g, circle, circle, order=48)
    eta_fg = boundary_correspondence(CompositeMap((f, g)), circle, circle, order=48)
    t = uniform_nodes(96)
    assert np.abs(eta_fg(t) - eta_f(eta_g(t))).max() < 1e-10


def test_verify_injective():
    good = PowerSeriesMap([0, 1.0, 0.2], domain=UNIT_DISK)
    assert verify_injective(good, UNIT_DISK).passed
    bad = PowerSeriesMap([0, 1.0, 0.0, 0.6], domain=UNIT_DISK)  # derivative vanishes inside
    assert not verify_injective(bad, UNIT_DISK).passed
    laurent = LaurentSeriesMap(1.0, [0, 0.3], domain=UNIT_EXTERIOR)
    rep = verify_injective(laurent, UNIT_EXTERIOR)
    assert rep.passed and rep.pole_count == 1


@settings(max_examples=30, deadline=None)
@given(moebius_maps())
def test_fit_moebius_recovers(m):
    x = 1.5 * np.exp(1j * uniform_nodes(32)) + 0.1
    y = m(x)
    if not np.all(np.isfinite(y)) or np.abs(y).max() > 1e4:
        return
    fit, resid = fit_moebius(x, y)
    assert resid < 1e-8 * max(1.0, float(np.abs(y).max()))


def test_as_curve_image_of_moebius():
    c = AnalyticCurve.circle(0.5, 1.0, -1)
    m = MoebiusMap.affine(2j, 1.0)
    img, defect = as_curve_image(m, c, 8)
    assert defect < 1e-13
    assert np.allclose(img.padded(8), (2j * c.padded(8)) + np.eye(17)[8], atol=1e-13)
    assert img.orientation == c.orientation


def test_out_of_chart_domain():
    p = PowerSeriesMap([0, 1.0, 0.2], domain=DomainSpec([AnalyticCurve.circle(0, 1, 1)], 0))
    with pytest.raises(OutOfChart):
        p(5.0)
