"""Analytic Jordan curves, multiply connected domains and geometric predicates.

A curve is a truncated Fourier series ``gamma(theta) = sum_k c_k exp(i k theta)``
for ``k_min <= k <= k_max``.  Points of the Riemann sphere are plain Python /
numpy complex numbers, with :data:`INFINITY` standing for the point at
infinity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import PointOnCurve, QuadratureAmbiguous

INFINITY = complex(math.inf, 0.0)

# on-curve threshold, relative to the curve diameter
ON_CURVE_REL = 1e-12
MIN_SAMPLES = 256
_CHUNK = 256


def is_infinite(z) -> np.ndarray | bool:
    """True where ``z`` is the point at infinity (either component infinite)."""
    return np.isinf(z)


def sample_count(order: int) -> int:
    """Sampling density used by every geometric predicate."""
    return max(8 * int(order), MIN_SAMPLES)


def uniform_nodes(m: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(m) / m


def fourier_project(values: np.ndarray, kmax: int) -> np.ndarray:
    """Fourier coefficients ``k = -kmax..kmax`` of samples on uniform nodes."""
    values = np.asarray(values, dtype=complex)
    m = values.size
    if 2 * kmax >= m:
        raise ValueError(f"need more than {2 * kmax} samples to resolve order {kmax}, got {m}")
    c = np.fft.fft(values) / m
    return c[np.arange(-kmax, kmax + 1) % m]


def trig_eval(coeffs: np.ndarray, k_min: int, theta) -> np.ndarray:
    """Evaluate ``sum_j coeffs[j] exp(i (k_min + j) theta)``."""
    theta = np.asarray(theta, dtype=float)
    return np.exp(1j * k_min * theta) * npoly.polyval(np.exp(1j * theta), coeffs)


def polygon_winding(points: np.ndarray, z) -> np.ndarray:
    """Winding number of the closed polygon ``points`` about each ``z``.

    Sums principal argument increments, so the answer is an exact integer for
    the polygon itself.
    """
    pts = np.asarray(points, dtype=complex)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty(z.shape, dtype=int)
    flat = z.ravel()
    res = out.ravel()
    nxt = np.roll(pts, -1)
    for s in range(0, flat.size, _CHUNK):
        zz = flat[s:s + _CHUNK, None]
        ang = np.angle((nxt[None, :] - zz) / (pts[None, :] - zz))
        res[s:s + _CHUNK] = np.rint(ang.sum(axis=1) / (2 * np.pi)).astype(int)
    return out


def _segments_cross(p: np.ndarray, q: np.ndarray, *, same: bool) -> int:
    """Count proper crossings between segments of closed polygons ``p`` and ``q``.

    With ``same=True`` the two polygons are the same and adjacent segments are
    skipped.
    """
    pa, pb = p, np.roll(p, -1)
    qa, qb = q, np.roll(q, -1)
    m = q.size

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    count = 0
    for s in range(0, p.size, _CHUNK):
        a = pa[s:s + _CHUNK, None]
        b = pb[s:s + _CHUNK, None]
        d1 = cross(b - a, qa[None, :] - a)
        d2 = cross(b - a, qb[None, :] - a)
        d3 = cross(qb[None, :] - qa[None, :], a - qa[None, :])
        d4 = cross(qb[None, :] - qa[None, :], b - qa[None, :])
        hit = (d1 * d2 < 0) & (d3 * d4 < 0)
        if same:
            i = np.arange(s, min(s + _CHUNK, p.size))[:, None]
            j = np.arange(m)[None, :]
            gap = np.abs(i - j)
            gap = np.minimum(gap, m - gap)
            hit &= gap >= 2
        count += int(hit.sum())
    return count // 2 if same else count


def _min_distance(p: np.ndarray, q: np.ndarray) -> float:
    best = math.inf
    for s in range(0, p.size, _CHUNK):
        best = min(best, float(np.abs(p[s:s + _CHUNK, None] - q[None, :]).min()))
    return best


@dataclass(frozen=True, eq=False)
class AnalyticCurve:
    """Closed analytic Jordan curve given by its Fourier coefficients.

    ``orientation`` is +1 when the domain lies to the left of the curve as
    ``theta`` increases and -1 when it lies to the right.
    """

    coeffs: np.ndarray
    k_min: int = 0
    orientation: int = 1
    diameter: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size == 0:
            raise ValueError("curve needs at least one coefficient")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "k_min", int(self.k_min))
        if self.orientation not in (1, -1):
            raise ValueError(f"orientation must be +1 or -1, got {self.orientation!r}")
        object.__setattr__(self, "orientation", int(self.orientation))
        pts = self(uniform_nodes(MIN_SAMPLES))
        object.__setattr__(self, "diameter", _diameter(pts))

    @classmethod
    def circle(cls, centre: complex = 0.0, radius: float = 1.0, orientation: int = 1) -> AnalyticCurve:
        return cls([centre, radius], k_min=0, orientation=orientation)

    @classmethod
    def from_samples(cls, values: np.ndarray, order: int, orientation: int = 1) -> AnalyticCurve:
        """Fourier-project samples on uniform nodes to a curve of the given order."""
        return cls(fourier_project(values, order), k_min=-order, orientation=orientation)

    @property
    def k_max(self) -> int:
        return self.k_min + self.coeffs.size - 1

    @property
    def order(self) -> int:
        return max(abs(self.k_min), abs(self.k_max))

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    def coefficient(self, k: int) -> complex:
        j = k - self.k_min
        return complex(self.coeffs[j]) if 0 <= j < self.coeffs.size else 0j

    def padded(self, order: int) -> np.ndarray:
        """Coefficients ``k = -order..order`` (zero outside the stored range)."""
        return np.array([self.coefficient(k) for k in range(-order, order + 1)])

    def __call__(self, theta) -> np.ndarray:
        return trig_eval(self.coeffs, self.k_min, theta)

    def derivative(self, theta) -> np.ndarray:
        return trig_eval(1j * self.ks * self.coeffs, self.k_min, theta)

    def second_derivative(self, theta) -> np.ndarray:
        return trig_eval(-(self.ks ** 2) * self.coeffs, self.k_min, theta)

    def __eq__(self, other):
        if not isinstance(other, AnalyticCurve):
            return NotImplemented
        return (self.k_min == other.k_min and self.orientation == other.orientation
                and np.array_equal(self.coeffs, other.coeffs))

    __hash__ = None

    def samples(self, m: int | None = None) -> np.ndarray:
        return self(uniform_nodes(m or sample_count(self.order)))

    @property
    def signed_area(self) -> float:
        return float(np.pi * np.sum(self.ks * np.abs(self.coeffs) ** 2))

    @property
    def is_ccw(self) -> bool:
        return self.signed_area > 0

    @property
    def domain_is_bounded(self) -> bool:
        """Whether the domain side of this curve is its bounded side."""
        return self.is_ccw == (self.orientation > 0)

    @property
    def hole_contains_infinity(self) -> bool:
        return self.domain_is_bounded

    @property
    def centroid_coefficient(self) -> complex:
        return self.coefficient(0)

    def reversed(self) -> AnalyticCurve:
        """Same trace traversed backwards; the orientation flag flips so the domain side is kept."""
        return AnalyticCurve(self.coeffs[::-1], k_min=-self.k_max, orientation=-self.orientation)

    def with_orientation(self, orientation: int) -> AnalyticCurve:
        return AnalyticCurve(self.coeffs, self.k_min, orientation)

    def shifted(self, alpha: float) -> AnalyticCurve:
        """The reparameterised curve ``theta -> gamma(theta + alpha)``."""
        return AnalyticCurve(self.coeffs * np.exp(1j * self.ks * alpha), self.k_min, self.orientation)

    def on_curve_threshold(self) -> float:
        return ON_CURVE_REL * self.diameter

    def injectivity_report(self, m: int | None = None) -> dict:
        m = m or sample_count(self.order)
        t = uniform_nodes(m)
        pts = self(t)
        speed = np.abs(self.derivative(t))
        crossings = _segments_cross(pts, pts, same=True)
        # nearest non-adjacent sample pair, in units of the mean sample spacing
        spacing = float(np.mean(np.abs(np.diff(np.append(pts, pts[0])))))
        nearest = math.inf
        idx = np.arange(m)
        for s in range(0, m, _CHUNK):
            d = np.abs(pts[s:s + _CHUNK, None] - pts[None, :])
            gap = np.abs(idx[s:s + _CHUNK, None] - idx[None, :])
            gap = np.minimum(gap, m - gap)
            d[gap < 2] = np.inf
            nearest = min(nearest, float(d.min()))
        min_speed = float(speed.min())
        passed = (crossings == 0 and nearest > 1e-9 * self.diameter
                  and min_speed > 1e-10 * self.diameter)
        return {
            "passed": bool(passed),
            "crossings": crossings,
            "min_separation": nearest / spacing if spacing > 0 else 0.0,
            "min_speed": min_speed / self.diameter if self.diameter > 0 else 0.0,
        }

    def is_valid(self) -> bool:
        return self.injectivity_report()["passed"]

    def winding(self, z, *, strict: bool = False) -> np.ndarray:
        """Vectorised winding numbers about finite points.

        Uses trapezoidal quadrature of ``gamma'/(gamma - z)``.  Points whose
        pre-rounding value is not near an integer are re-done on 4x denser
        samples (up to 64x); with ``strict`` a remaining ambiguity raises.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.zeros(z.shape, dtype=int)
        flat = z.ravel()
        res = out.ravel()
        pending = np.arange(flat.size)
        m = sample_count(self.order)
        for attempt in range(4):
            t = uniform_nodes(m)
            g = self(t)
            dg = self.derivative(t)
            raw = _trapezoid_winding(g, dg, flat[pending])
            rounded = np.rint(raw)
            good = np.abs(raw - rounded) < 0.25
            res[pending[good]] = rounded[good].astype(int)
            pending = pending[~good]
            if pending.size == 0:
                return out
            if strict:
                raise QuadratureAmbiguous(
                    f"winding quadrature not near an integer ({raw[~good][0]:.3f}); curve undersampled")
            m *= 4
        # last resort: exact polygon winding on the densest sampling
        res[pending] = polygon_winding(self(uniform_nodes(m)), flat[pending])
        return out

    def domain_side(self, z) -> np.ndarray:
        """Boolean mask: points lying on the domain side of this curve."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty(z.shape, dtype=bool)
        inf = np.isinf(z)
        out[inf] = not self.domain_is_bounded
        if (~inf).any():
            w = self.winding(z[~inf])
            left = (w == 1) if self.is_ccw else (w == 0)
            out[~inf] = left if self.orientation > 0 else ~left
        return out

    def distance_to(self, z, m: int | None = None) -> np.ndarray:
        """Sample-based distance from finite points to the trace."""
        pts = self.samples(m or 4 * sample_count(self.order))
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty(z.shape)
        flat, res = z.ravel(), out.ravel()
        for s in range(0, flat.size, _CHUNK):
            res[s:s + _CHUNK] = np.abs(flat[s:s + _CHUNK, None] - pts[None, :]).min(axis=1)
        return out

    def domain_normal(self, theta) -> np.ndarray:
        """Unit normal pointing into the domain side."""
        d = self.derivative(theta)
        return self.orientation * 1j * d / np.abs(d)


def _diameter(pts: np.ndarray) -> float:
    return float(np.abs(pts[:, None] - pts[None, :]).max())


def _trapezoid_winding(g: np.ndarray, dg: np.ndarray, z: np.ndarray) -> np.ndarray:
    out = np.empty(z.size)
    m = g.size
    for s in range(0, z.size, _CHUNK):
        q = dg[None, :] / (g[None, :] - z[s:s + _CHUNK, None])
        out[s:s + _CHUNK] = q.sum(axis=1).imag / m
    return out


def eval_curve(curve: AnalyticCurve, theta):
    """Point(s) of the curve at parameter ``theta``."""
    out = curve(theta)
    return complex(out) if np.ndim(theta) == 0 else out


def winding_number(curve: AnalyticCurve, point: complex, samples: int | None = None) -> int:
    """Winding number of ``curve`` about a finite point.

    Raises :class:`PointOnCurve` when the point is (numerically) on the trace
    and :class:`QuadratureAmbiguous` when the quadrature is not near an integer.
    """
    point = complex(point)
    if is_infinite(point):
        raise ValueError("winding number is only defined about finite points")
    m = samples or sample_count(curve.order)
    t = uniform_nodes(m)
    g = curve(t)
    if float(np.abs(g - point).min()) < curve.on_curve_threshold():
        raise PointOnCurve(f"point {point} lies on the curve trace")
    raw = float(_trapezoid_winding(g, curve.derivative(t), np.array([point]))[0])
    k = round(raw)
    if abs(raw - k) >= 0.25:
        raise QuadratureAmbiguous(f"winding quadrature gave {raw:.4f}; increase sampling")
    return int(k)


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """An n-tuply connected domain: n boundary curves and a certified interior point."""

    curves: tuple
    base_point: complex = INFINITY

    def __post_init__(self):
        object.__setattr__(self, "curves", tuple(self.curves))
        object.__setattr__(self, "base_point", complex(self.base_point))

    @property
    def n(self) -> int:
        return len(self.curves)

    def __eq__(self, other):
        if not isinstance(other, DomainSpec):
            return NotImplemented
        same_base = (self.base_point == other.base_point
                     or (is_infinite(self.base_point) and is_infinite(other.base_point)))
        return same_base and len(self.curves) == len(other.curves) and all(
            a == b for a, b in zip(self.curves, other.curves))

    __hash__ = None

    def contains(self, z, margin: float = 0.0) -> np.ndarray:
        """Points on the domain side of every curve, at least ``margin`` from every trace."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        ok = np.ones(z.shape, dtype=bool)
        for c in self.curves:
            ok &= c.domain_side(z)
            if margin > 0:
                fin = ~np.isinf(z)
                dist = np.full(z.shape, np.inf)
                dist[fin] = c.distance_to(z[fin])
                ok &= dist > margin
        return ok

    @property
    def scale(self) -> float:
        return max(c.diameter for c in self.curves) if self.curves else 1.0

    def interior_probes(self, rings: Sequence[float] = (0.05, 0.15, 0.4), per_curve: int = 24) -> np.ndarray:
        """Points inside the domain, offset from each boundary curve along its domain normal."""
        pts = []
        if not is_infinite(self.base_point):
            pts.append(np.array([self.base_point]))
        for c in self.curves:
            t = uniform_nodes(per_curve) + np.pi / per_curve
            base, nrm = c(t), c.domain_normal(t)
            for r in rings:
                pts.append(base + r * c.diameter * nrm)
        cand = np.concatenate(pts) if pts else np.zeros(0, complex)
        margin = 0.25 * min(rings) * min(c.diameter for c in self.curves)
        return cand[self.contains(cand, margin=margin)]


@dataclass
class Check:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list

    @property
    def accepted(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {"accepted": self.accepted,
                "checks": [{"name": c.name, "passed": c.passed, "margin": c.margin,
                            "detail": c.detail} for c in self.checks]}


def validate_domain(domain: DomainSpec) -> ValidationReport:
    """Check every domain invariant and report margins; never raises."""
    checks = []
    curves = list(domain.curves)
    n = len(curves)
    checks.append(Check("connectivity", n >= 1, float(n), f"{n} boundary curves"))
    if n == 0:
        return ValidationReport(checks)

    samples = []
    for i, c in enumerate(curves):
        rep = c.injectivity_report()
        checks.append(Check(f"curve_{i}_jordan", rep["passed"], rep["min_separation"],
                            f"crossings={rep['crossings']} min_speed={rep['min_speed']:.3g}"))
        samples.append(c.samples())

    min_gap, crossings = math.inf, 0
    for i in range(n):
        for j in range(i + 1, n):
            min_gap = min(min_gap, _min_distance(samples[i], samples[j]))
            crossings += _segments_cross(samples[i], samples[j], same=False)
    if n > 1:
        thresh = ON_CURVE_REL * domain.scale
        checks.append(Check("disjoint_traces", crossings == 0 and min_gap > thresh,
                            min_gap, f"crossings={crossings}"))

    bad = 0
    for i in range(n):
        for j in range(n):
            if i != j:
                bad += int((~curves[i].domain_side(samples[j])).sum())
    if n > 1:
        checks.append(Check("separated_complements", bad == 0, float(-bad),
                            f"{bad} samples on a complementary side"))

    bp = domain.base_point
    inside = [bool(c.domain_side(bp)[0]) for c in curves]
    if is_infinite(bp):
        margin = math.inf
    else:
        margin = min(float(c.distance_to(bp)[0]) for c in curves)
    checks.append(Check("base_point", all(inside) and margin > ON_CURVE_REL * domain.scale, margin,
                        "side signature " + "".join("+" if s else "-" for s in inside)))
    return ValidationReport(checks)


def domain_side_count(domain: DomainSpec, point: complex) -> int:
    """Number of curves for which ``point`` lies on the domain side."""
    return sum(int(c.domain_side(point)[0]) for c in domain.curves)

