import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weldfactor import (AnalyticCurve, BoundaryCorrespondence, CompositeMap, InverseMap, LaurentSeriesMap,
                        MoebiusMap, PowerSeriesMap, WeldingProblem, solve_welding)
from weldfactor import schema as js
from weldfactor.curves import INFINITY, DomainSpec
from weldfactor.errors import SchemaError
from weldfactor.riemann import UNIT_DISK, UNIT_EXTERIOR

floats = st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=True, width=64)
complexes = st.builds(complex, floats, floats)


def reparse(text):
    return json.loads(text)


def roundtrip(enc, dec, value):
    text = js.dumps(enc(value))
    back = dec(reparse(text))
    assert js.dumps(enc(back)) == text
    return back


@settings(max_examples=50)
@given(st.lists(complexes, min_size=1, max_size=9), st.integers(-4, 0), st.sampled_from([1, -1]))
def test_curve_bit_exact(coeffs, k_min, orientation):
    c = AnalyticCurve(coeffs, k_min, orientation)
    back = js.dec_curve(reparse(json.dumps(js.plain(js.enc_curve(c)))))
    assert back == c and back.coeffs.tobytes() == c.coeffs.tobytes()


@settings(max_examples=50)
@given(st.lists(complexes, min_size=1, max_size=9), st.integers(-4, 0), st.sampled_from([1, -1]))
def test_correspondence_bit_exact(coeffs, k_min, direction):
    b = BoundaryCorrespondence(coeffs, k_min, direction)
    back = js.dec_corr(reparse(json.dumps(js.plain(js.enc_corr(b)))))
    assert back == b and back.coeffs.tobytes() == b.coeffs.tobytes()


def test_domain_roundtrip():
    d = DomainSpec([AnalyticCurve.circle(1 / 3, 0.7, -1), AnalyticCurve([0.1, 2 ** -1074, 1.0], -1, -1)],
                   INFINITY)
    assert js.dec_domain(reparse(json.dumps(js.plain(js.enc_domain(d))))) == d
    bounded = DomainSpec([AnalyticCurve.circle()], base_point=0.1 + 0.2j)
    assert js.dec_domain(reparse(json.dumps(js.plain(js.enc_domain(bounded))))) == bounded


@pytest.mark.parametrize("fmap", [
    MoebiusMap(2 + 1j, 0.1, 1 / 7, 3),
    PowerSeriesMap([0, 1.0, 0.2 + 1e-300j], domain=UNIT_DISK),
    LaurentSeriesMap(1.0000000000000002, [0.3, 1 / 3], domain=UNIT_EXTERIOR),
    CompositeMap((MoebiusMap(1, 2, 3, 4), InverseMap(LaurentSeriesMap(1.0, [0, 0.1]))), domain=UNIT_EXTERIOR),
])
def test_map_bit_exact(fmap):
    text = json.dumps(js.plain(js.enc_map(fmap)), sort_keys=True)
    back = js.dec_map(reparse(text))
    assert json.dumps(js.plain(js.enc_map(back)), sort_keys=True) == text
    assert back == fmap
    z = fmap.domain.interior_probes()[:8] if fmap.domain is not None else np.array([1.5 + 0.5j, -2.0])
    assert np.array_equal(back(z), fmap(z))


def test_problem_roundtrip(fixture2):
    back = roundtrip(js.enc_problem, js.dec_problem, fixture2.problem)
    assert np.array_equal(back.interior_samples, fixture2.problem.interior_samples)


def test_result_roundtrip(fixture2, result2):
    back = roundtrip(js.enc_result, js.dec_result, result2)
    z = fixture2.problem.interior_samples[:20, 0]
    assert np.array_equal(back(z), result2(z))


def test_welding_roundtrip():
    sol = solve_welding(WeldingProblem(BoundaryCorrespondence([0.1, 0.05j], 0)))
    back = roundtrip(js.enc_welding, js.dec_welding, sol)
    assert back.weld_curve == sol.weld_curve and back.residual == sol.residual


def test_deterministic_drops_volatile_keys():
    doc = {"a": 1, "seconds": 2.0, "nested": [{"created": "x", "b": np.float64(0.5)}]}
    assert reparse(js.dumps(doc, deterministic=True)) == {"a": 1, "nested": [{"b": 0.5}]}
    assert "seconds" in reparse(js.dumps(doc))


@pytest.mark.parametrize("doc", [
    [], {"kind": "problem"}, {"schema_version": 99, "kind": "problem"},
    {"schema_version": 1, "kind": "problem", "domain": {"curves": [{"coeffs": [[0, 0], "x"]}]}},
])
def test_malformed_documents(doc):
    with pytest.raises(SchemaError):
        js.dec_problem(doc)


def test_bad_complex():
    with pytest.raises(SchemaError):
        js.dec_complex([1, 2, 3])
    assert js.dec_complex("inf") == INFINITY and js.enc_complex(INFINITY) == "inf"
