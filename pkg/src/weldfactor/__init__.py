"""Factor conformal maps of multiply connected domains into maps of simply connected domains."""
from .confmap import (BoundaryCorrespondence, CompositeMap, InverseMap, LaurentSeriesMap, MoebiusMap,
                      PowerSeriesMap, boundary_correspondence, compose, eval_map, invert_map,
                      verify_injective)
from .curves import INFINITY, AnalyticCurve, DomainSpec, validate_domain, winding_number
from .factorize import (BoundaryDatum, FactorizationProblem, FactorizationResult, FactorizeOptions,
                        PeelState, factorize, match_components, peel_factor, verify_factorization)
from .fixtures import FixtureSpec, exact_polynomial_curve, make_fixture
from .riemann import riemann_exterior, riemann_interior
from .welding import WeldingProblem, WeldingSolution, solve_welding, welding_residual

__version__ = "0.1.0"

__all__ = [
    "AnalyticCurve", "BoundaryCorrespondence", "BoundaryDatum", "CompositeMap", "DomainSpec",
    "FactorizationProblem", "FactorizationResult", "FactorizeOptions", "FixtureSpec", "INFINITY",
    "InverseMap", "LaurentSeriesMap", "MoebiusMap", "PeelState", "PowerSeriesMap", "WeldingProblem",
    "WeldingSolution", "boundary_correspondence", "compose", "eval_map", "exact_polynomial_curve",
    "factorize", "invert_map", "make_fixture", "match_components", "peel_factor", "riemann_exterior",
    "riemann_interior", "solve_welding", "validate_domain", "verify_factorization", "verify_injective",
    "welding_residual", "winding_number",
]
