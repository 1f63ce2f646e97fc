"""Synthetic factorisation problems with a known answer.

The domain is the complement of N perturbed circles.  The ground-truth map
is ``G = M o P_1 o ... o P_N`` where each ``P_j(z) = z + s_j / (z - p_j)`` has
its pole inside hole j and ``M`` is a Moebius map whose pole is far out in
the domain.  All randomness comes from :class:`SplitMix64` so a spec gives the
same fixture in every language that implements the generator.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .confmap import (BoundaryCorrespondence, CompositeMap, LaurentSeriesMap, MoebiusMap,
                      PowerSeriesMap, boundary_correspondence, verify_injective)
from .curves import INFINITY, AnalyticCurve, DomainSpec, uniform_nodes, validate_domain
from .errors import BoundViolated, CannotCertify
from .factorize import BoundaryDatum, FactorizationProblem
from .riemann import UNIT_DISK, UNIT_EXTERIOR

MASK64 = (1 << 64) - 1
MAX_HALVINGS = 6


class SplitMix64:
    """The SplitMix64 generator (Steele, Lea and Flood), 64-bit state."""

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Double in ``[lo, hi)`` from the top 53 bits."""
        return lo + (hi - lo) * (self.next_u64() >> 11) * 2.0 ** -53

    def angle(self) -> float:
        return self.uniform(0.0, 2 * math.pi)

    def below(self, n: int) -> int:
        return int(self.uniform(0.0, n))

    def permutation(self, n: int) -> list:
        """Fisher-Yates shuffle of ``0..n-1``."""
        p = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            p[i], p[j] = p[j], p[i]
        return p


@dataclass
class FixtureSpec:
    n: int = 2
    seed: int = 0
    spacing: float = 4.0
    radius_range: tuple = (0.8, 1.1)
    harmonic_amplitude: float = 0.05
    pole_offset: float = 0.1
    strength: float = 0.15
    warp: float = 0.1
    moebius_distance: float = 40.0
    samples: int = 200
    band: float = 0.02
    order: int = 64
    shuffle: bool = True

    def check(self) -> None:
        if self.n < 1:
            raise BoundViolated("fixture needs at least one hole")
        lo, hi = self.radius_range
        if not (0 < lo <= hi) or 2 * hi * 1.2 >= self.spacing:
            raise BoundViolated("holes too large for their spacing")
        if not (0 <= self.harmonic_amplitude <= 0.1):
            raise BoundViolated("harmonic amplitude outside [0, 0.1]")
        if not (0 <= self.pole_offset <= 0.3):
            raise BoundViolated("pole offset outside [0, 0.3]")
        if not (0 < self.strength <= 0.3):
            raise BoundViolated("pole strength outside (0, 0.3]")
        if not (0 <= self.warp < 0.5):
            raise BoundViolated("correspondence warp outside [0, 0.5)")
        if self.samples < 1 or self.band <= 0:
            raise BoundViolated("need positive sample count and band width")


@dataclass
class Fixture:
    problem: FactorizationProblem
    truth: CompositeMap
    log: dict = field(default_factory=dict)
    permutation: tuple = ()


def _centres(spec: FixtureSpec, rng: SplitMix64) -> np.ndarray:
    n = spec.n
    if n == 1:
        base = np.zeros(1, dtype=complex)
    elif n == 2:
        base = np.array([-0.5, 0.5]) * spec.spacing + 0j
    else:
        rad = spec.spacing / (2 * math.sin(math.pi / n))
        base = rad * np.exp(2j * np.pi * np.arange(n) / n)
    rot = np.exp(1j * rng.angle())
    jitter = np.array([0.05 * spec.spacing * rng.uniform(-1, 1) * np.exp(1j * rng.angle())
                       for _ in range(n)])
    return rot * base + jitter


def _hole(centre: complex, radius: float, spec: FixtureSpec, rng: SplitMix64) -> AnalyticCurve:
    # counter-clockwise circle with small harmonics; the domain is outside
    coeffs = {0: centre, 1: radius}
    for k in (-2, 2, 3):
        coeffs[k] = spec.harmonic_amplitude * radius * rng.uniform() * np.exp(1j * rng.angle())
    ks = sorted(coeffs)
    arr = np.zeros(ks[-1] - ks[0] + 1, dtype=complex)
    for k, v in coeffs.items():
        arr[k - ks[0]] = v
    return AnalyticCurve(arr, k_min=ks[0], orientation=-1)


def pole_block(p: complex, s: complex, rho: float) -> CompositeMap:
    """``z + s/(z - p)`` as a Laurent series in ``u = (z - p)/rho``, valid for ``|z - p| >= rho``."""
    lau = LaurentSeriesMap(rho, [p, s / rho])
    return CompositeMap((lau, MoebiusMap.affine(1 / rho, -p / rho)))


def _push(block, curve: AnalyticCurve, order: int) -> AnalyticCurve:
    t = uniform_nodes(4 * order + 4)
    return AnalyticCurve.from_samples(np.asarray(block(curve(t))), order, curve.orientation)


def _interior_samples(domain: DomainSpec, spec: FixtureSpec, rng: SplitMix64,
                      radii: list) -> np.ndarray:
    pts = []
    # a band hugging each hole lets the matching see which target it lands on
    for c, r in zip(domain.curves, radii):
        t = uniform_nodes(16) + rng.uniform(0, 2 * np.pi / 16)
        pts.append(c(t) + spec.band * r * c.domain_normal(t))
    allc = np.concatenate([c.samples() for c in domain.curves])
    lo = complex(allc.real.min() - 2, allc.imag.min() - 2)
    hi = complex(allc.real.max() + 2, allc.imag.max() + 2)
    bulk = []
    tries = 0
    while len(bulk) < spec.samples and tries < 100 * spec.samples:
        tries += 1
        z = complex(rng.uniform(lo.real, hi.real), rng.uniform(lo.imag, hi.imag))
        if domain.contains(z, margin=0.1 * min(radii))[0]:
            bulk.append(z)
    pts.append(np.array(bulk, dtype=complex))
    return np.concatenate(pts)


def make_fixture(spec: FixtureSpec) -> Fixture:
    """Deterministic fixture for ``spec``; raises :class:`CannotCertify` if a block cannot be certified."""
    spec.check()
    rng = SplitMix64(spec.seed)
    n, order = spec.n, spec.order
    centres = _centres(spec, rng)
    radii = [rng.uniform(*spec.radius_range) for _ in range(n)]
    holes = [_hole(c, r, spec, rng) for c, r in zip(centres, radii)]
    domain = DomainSpec(holes, base_point=INFINITY)
    rep = validate_domain(domain)
    if not rep.accepted:
        raise CannotCertify("generated holes do not form a valid domain")

    # pole blocks are applied P_N first, so block j sees holes pushed by P_{j+1..N}
    current = list(holes)
    blocks = [None] * n
    log_blocks = [None] * n
    for j in reversed(range(n)):
        hole = current[j]
        p = centres[j] + spec.pole_offset * radii[j] * rng.uniform() * np.exp(1j * rng.angle())
        s = spec.strength * radii[j] ** 2 * np.exp(1j * rng.angle())
        if hole.winding(p)[0] == 0:
            raise CannotCertify(f"pole of block {j} is not inside its hole")
        rho = 0.9 * float(hole.distance_to(p)[0])
        cert_dom = DomainSpec([AnalyticCurve.circle(p, rho, orientation=-1)], base_point=INFINITY)
        halvings = 0
        while True:
            block = pole_block(p, s, rho)
            if verify_injective(block, cert_dom).passed:
                break
            if halvings == MAX_HALVINGS:
                raise CannotCertify(f"pole block {j} not injective after {MAX_HALVINGS} halvings")
            s *= 0.5
            halvings += 1
        blocks[j] = block.with_domain(cert_dom)
        log_blocks[j] = {"pole": [p.real, p.imag], "strength": [s.real, s.imag],
                         "chart_radius": rho, "halvings": halvings}
        current = [_push(block, c, order) for c in current]

    zm = spec.moebius_distance * np.exp(1j * rng.angle())
    rot = np.exp(1j * rng.angle())
    shift = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
    mob = MoebiusMap(rot, rot * shift, -1 / zm, 1)
    truth = CompositeMap((mob,) + tuple(blocks), domain=domain)
    cert = verify_injective(truth, domain)
    if not cert.passed:
        raise CannotCertify(f"composed map failed certification: {cert.detail}")

    # boundary data: targets in the warped parameter s = w(theta)
    data = []
    log_w = []
    m = 4 * order + 4
    for j, c in enumerate(holes):
        alpha, beta = rng.angle(), rng.angle()
        eps = spec.warp * rng.uniform(0.5, 1.5)
        w = BoundaryCorrespondence([alpha, -1j * eps * np.exp(-1j * beta)], k_min=0)
        s_nodes = uniform_nodes(m)
        theta = w.solve(s_nodes)
        target = AnalyticCurve.from_samples(np.asarray(truth(c(theta))), order, c.orientation)
        t = uniform_nodes(256)
        defect = float(np.abs(target(w(t)) - np.asarray(truth(c(t)))).max()) / target.diameter
        if defect > 1e-10 or not w.is_monotone():
            raise CannotCertify(f"boundary data of curve {j} inconsistent (defect {defect:.2e})")
        data.append(BoundaryDatum(target, w))
        log_w.append({"alpha": alpha, "beta": beta, "eps": eps, "defect": defect})

    perm = rng.permutation(n) if spec.shuffle else list(range(n))
    # entry perm[i] of the listed data belongs to source curve i
    listed = [None] * n
    for i in range(n):
        listed[perm[i]] = data[i]

    z = _interior_samples(domain, spec, rng, radii)
    gz = np.asarray(truth(z))
    samples = np.stack([z, gz], axis=1)
    problem = FactorizationProblem(domain, listed, samples)
    log = {"spec": asdict(spec), "centres": [[c.real, c.imag] for c in centres], "radii": radii,
           "blocks": log_blocks, "moebius": {"pole": [zm.real, zm.imag], "rotation": [rot.real, rot.imag],
                                             "shift": [shift.real, shift.imag]},
           "correspondences": log_w, "permutation": list(perm)}
    return Fixture(problem, truth, log, tuple(perm))


def check_fixture(fix: Fixture) -> dict:
    """Re-derive the stored data from the truth map; returns the largest discrepancies."""
    prob = fix.problem
    z = prob.interior_samples
    sample_gap = float(np.abs(np.asarray(fix.truth(z[:, 0])) - z[:, 1]).max())
    corr_gap = 0.0
    t = uniform_nodes(256)
    for i, c in enumerate(prob.domain.curves):
        b = prob.boundary_data[fix.permutation[i]]
        eta = boundary_correspondence(fix.truth, c, b.target, order=prob_order(b))
        corr_gap = max(corr_gap, float(np.abs(eta(t) - b.correspondence(t)).max()))
    return {"sample_gap": sample_gap, "correspondence_gap": corr_gap,
            "injective": verify_injective(fix.truth, prob.domain).passed}


def prob_order(b: BoundaryDatum) -> int:
    return max(b.target.order, b.correspondence.order, 8)


def exact_polynomial_curve(coeffs) -> tuple:
    """Curve traced by ``sum_k a_k zeta^k`` on the unit circle, with its generating map.

    ``coeffs`` maps exponents to coefficients and must contain ``1``.  Only
    positive exponents give the interior map of the curve; ``1`` plus negative
    exponents give the exterior map.  Univalence is guaranteed by requiring
    ``sum_{k != 1} |k| |a_k| < |a_1|`` (so ``|a_2| < 1/2`` or ``|a_{-1}| < 1``
    when ``a_1 = 1``).
    """
    c = {int(k): complex(v) for k, v in dict(coeffs).items() if complex(v) != 0}
    a1 = c.get(1, 0j)
    if a1 == 0:
        raise BoundViolated("the linear coefficient must be nonzero")
    extra = {k: v for k, v in c.items() if k not in (0, 1)}
    if any(k > 1 for k in extra) and any(k < 0 for k in extra):
        raise BoundViolated("mixing positive and negative powers gives no Riemann map")
    budget = sum(abs(k) * abs(v) for k, v in extra.items())
    if budget >= abs(a1):
        raise BoundViolated(f"univalence bound violated: sum |k a_k| = {budget:.3g} >= |a_1|")
    if any(k < 0 for k in extra):
        kmax = -min(extra)
        tail = np.zeros(kmax + 1, dtype=complex)
        tail[0] = c.get(0, 0j)
        for k, v in extra.items():
            tail[-k] = v
        fmap = LaurentSeriesMap(a1, tail, domain=UNIT_EXTERIOR)
    else:
        kmax = max([1] + list(extra))
        arr = np.zeros(kmax + 1, dtype=complex)
        arr[0] = c.get(0, 0j)
        for k, v in c.items():
            arr[k] = v
        fmap = PowerSeriesMap(arr, domain=UNIT_DISK)
    return fmap.boundary_curve(), fmap
