"""Evaluable conformal maps, boundary correspondences and injectivity checks.

Map representations
-------------------
``MoebiusMap``        z -> (az+b)/(cz+d) on the whole sphere, stored with ad-bc = 1.
``PowerSeriesMap``    sum_{k>=0} a_k z^k on the closed unit disk.
``LaurentSeriesMap``  lam*z + sum_{k<=0} c_k z^k on the closed exterior disk.
``CompositeMap``      factors applied right to left.
``InverseMap``        the inverse of another map, evaluated by damped Newton.

Every map may carry the :class:`~weldfactor.curves.DomainSpec` on which it has
been certified conformal.  All maps accept scalars or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import ClassVar, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .curves import (INFINITY, AnalyticCurve, DomainSpec, fourier_project,
                     is_infinite, polygon_winding, sample_count, trig_eval,
                     uniform_nodes)
from .errors import EmptyList, NoConvergence, OutOfChart, TraceMismatch

CHART_SLACK = 1e-8
TOL_INV = 1e-12
TOL_CORR = 1e-10
NEWTON_MAX_ITER = 50


class ConformalMap:
    """Common evaluation machinery; subclasses supply ``_raw``/``_raw_deriv``."""

    kind: ClassVar[str] = ""
    domain: DomainSpec | None

    def __call__(self, z):
        return _scalar_or_array(z, lambda a: self._eval(a, check=True))

    def derivative(self, z):
        return _scalar_or_array(z, self._deriv)

    def _eval(self, z: np.ndarray, check: bool) -> np.ndarray:
        if check:
            bad = ~self._in_chart(z)
            if bad.any():
                raise OutOfChart(f"{self.kind} map evaluated outside its chart at {z[bad][0]}")
        return self._raw(z)

    def _in_chart(self, z: np.ndarray) -> np.ndarray:
        return np.ones(z.shape, dtype=bool)

    def _raw(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _deriv(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def initial_inverse(self, w: np.ndarray) -> np.ndarray:
        """Cheap starting guess for Newton inversion."""
        return np.array(w, dtype=complex, copy=True)

    def chart_grid(self) -> np.ndarray | None:
        """Sample points covering the natural chart, used as a Newton fallback."""
        return None

    def with_domain(self, domain: DomainSpec | None):
        return replace(self, domain=domain)

    def _key(self) -> tuple:
        raise NotImplementedError

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        mine, theirs = self._key(), other._key()
        same = all(_same(a, b) for a, b in zip(mine, theirs))
        return same and _same_domain(self.domain, other.domain)

    __hash__ = None


def _same(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(np.asarray(a), np.asarray(b))
    if isinstance(a, tuple):
        return len(a) == len(b) and all(x == y for x, y in zip(a, b))
    return a == b


def _same_domain(a, b) -> bool:
    if a is None or b is None:
        return a is b
    return a == b


def _scalar_or_array(z, fn):
    arr = np.asarray(z, dtype=complex)
    if arr.ndim == 0:
        return complex(fn(arr.reshape(1))[0])
    return fn(arr.ravel()).reshape(arr.shape)


@dataclass(frozen=True, eq=False)
class MoebiusMap(ConformalMap):
    a: complex = 1.0
    b: complex = 0.0
    c: complex = 0.0
    d: complex = 1.0
    domain: DomainSpec | None = None
    kind: ClassVar[str] = "moebius"

    def __post_init__(self):
        a, b, c, d = (complex(v) for v in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if det == 0:
            raise ValueError("degenerate Moebius map (ad - bc = 0)")
        s = np.sqrt(det)
        for name, v in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, complex(v / s))

    @classmethod
    def identity(cls) -> MoebiusMap:
        return cls(1, 0, 0, 1)

    @classmethod
    def affine(cls, scale: complex, shift: complex = 0.0) -> MoebiusMap:
        return cls(scale, shift, 0, 1)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def pole(self) -> complex:
        return INFINITY if self.c == 0 else -self.d / self.c

    def inverse(self) -> MoebiusMap:
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def then(self, other: MoebiusMap) -> MoebiusMap:
        """``other o self`` as a single Moebius map."""
        m = other.matrix @ self.matrix
        return MoebiusMap(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def _raw(self, z):
        a, b, c, d = self.a, self.b, self.c, self.d
        out = np.empty(z.shape, dtype=complex)
        inf = np.isinf(z)
        out[inf] = INFINITY if c == 0 else a / c
        zf = z[~inf]
        den = c * zf + d
        with np.errstate(divide="ignore", invalid="ignore"):
            val = (a * zf + b) / den
        val[den == 0] = INFINITY
        out[~inf] = val
        return out

    def _deriv(self, z):
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 / (self.c * z + self.d) ** 2

    def initial_inverse(self, w):
        return self.inverse()._raw(np.asarray(w, dtype=complex))

    def _key(self):
        return (self.a, self.b, self.c, self.d)


@dataclass(frozen=True, eq=False)
class PowerSeriesMap(ConformalMap):
    coeffs: np.ndarray = field(default_factory=lambda: np.array([0, 1], dtype=complex))
    domain: DomainSpec | None = None
    kind: ClassVar[str] = "power"

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size < 2 or c[1] == 0:
            raise ValueError("power series map needs a_1 != 0")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def _in_chart(self, z):
        return np.abs(z) <= 1 + CHART_SLACK

    def _raw(self, z):
        return npoly.polyval(z, self.coeffs)

    def _deriv(self, z):
        return npoly.polyval(z, npoly.polyder(self.coeffs))

    def initial_inverse(self, w):
        with np.errstate(invalid="ignore"):
            return (np.asarray(w, dtype=complex) - self.coeffs[0]) / self.coeffs[1]

    def chart_grid(self):
        r = np.linspace(0.0, 1.0, 17)[1:]
        t = uniform_nodes(96)
        return np.concatenate([[0j], (r[:, None] * np.exp(1j * t)[None, :]).ravel()])

    def boundary_curve(self) -> AnalyticCurve:
        """Image of the unit circle, domain (the image of the disk) on the left."""
        return AnalyticCurve(self.coeffs, k_min=0, orientation=1)

    def _key(self):
        return (self.coeffs,)


@dataclass(frozen=True, eq=False)
class LaurentSeriesMap(ConformalMap):
    """``lam*z + c_0 + c_{-1}/z + ...``; ``coeffs`` holds ``c_0, c_{-1}, ..., c_{-K}``."""

    lam: complex = 1.0
    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=complex))
    domain: DomainSpec | None = None
    kind: ClassVar[str] = "laurent"

    def __post_init__(self):
        lam = complex(self.lam)
        if lam == 0:
            raise ValueError("Laurent map needs a nonzero leading coefficient")
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        c.flags.writeable = False
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def _in_chart(self, z):
        return np.isinf(z) | (np.abs(z) >= 1 - CHART_SLACK)

    def _raw(self, z):
        out = np.empty(z.shape, dtype=complex)
        inf = np.isinf(z)
        out[inf] = INFINITY
        zf = z[~inf]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[~inf] = self.lam * zf + npoly.polyval(1.0 / zf, self.coeffs)
        return out

    def _deriv(self, z):
        out = np.full(z.shape, self.lam, dtype=complex)
        fin = ~np.isinf(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            u = 1.0 / z[fin]
            out[fin] = self.lam - u * u * npoly.polyval(u, npoly.polyder(self.coeffs))
        return out

    def initial_inverse(self, w):
        with np.errstate(invalid="ignore"):
            return (np.asarray(w, dtype=complex) - self.coeffs[0]) / self.lam

    def chart_grid(self):
        r = np.geomspace(1.0, 4.0, 17)
        t = uniform_nodes(96)
        return (r[:, None] * np.exp(1j * t)[None, :]).ravel()

    def boundary_curve(self) -> AnalyticCurve:
        """Image of the unit circle, domain (the image of the exterior) on the right."""
        coeffs = np.concatenate([self.coeffs[::-1], [self.lam]])
        return AnalyticCurve(coeffs, k_min=-self.order, orientation=-1)

    def _key(self):
        return (self.lam, self.coeffs)


@dataclass(frozen=True, eq=False)
class CompositeMap(ConformalMap):
    factors: tuple = ()
    domain: DomainSpec | None = None
    kind: ClassVar[str] = "composite"

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise EmptyList("a composite map needs at least one factor")
        object.__setattr__(self, "factors", factors)

    def _in_chart(self, z):
        return self.factors[-1]._in_chart(z)

    def _eval(self, z, check):
        for f in reversed(self.factors):
            z = f._eval(z, check)
        return z

    def _raw(self, z):
        return self._eval(z, check=False)

    def _deriv(self, z):
        out = np.ones(z.shape, dtype=complex)
        with np.errstate(all="ignore"):
            for f in reversed(self.factors):
                out = out * f._deriv(z)
                z = f._eval(z, check=False)
        return out

    def initial_inverse(self, w):
        w = np.asarray(w, dtype=complex)
        for f in self.factors:
            w = f.initial_inverse(w)
        return w

    def chart_grid(self):
        return self.factors[-1].chart_grid()

    def _key(self):
        return (self.factors,)


@dataclass(frozen=True, eq=False)
class InverseMap(ConformalMap):
    inner: ConformalMap = None
    domain: DomainSpec | None = None
    kind: ClassVar[str] = "inverse"

    def _eval(self, w, check):
        z = _invert(self.inner, w, self.inner.initial_inverse(w))
        if check:
            bad = ~self.inner._in_chart(z)
            if bad.any():
                raise OutOfChart(f"inverse image {z[bad][0]} leaves the chart of the inner map")
        return z

    def _raw(self, w):
        return self._eval(w, check=False)

    def _deriv(self, w):
        return 1.0 / self.inner._deriv(self._eval(w, check=False))

    def initial_inverse(self, z):
        return self.inner._eval(np.asarray(z, dtype=complex), check=False)

    def _key(self):
        return (self.inner,)


def eval_map(fmap: ConformalMap, z):
    """Value of ``fmap`` at ``z`` (scalar or array)."""
    return fmap(z)


def compose(factors: Sequence[ConformalMap], *, flatten: bool = True,
            domain: DomainSpec | None = None) -> CompositeMap:
    """Composite applying ``factors`` right to left."""
    factors = list(factors)
    if not factors:
        raise EmptyList("compose() needs at least one map")
    if flatten:
        flat = []
        for f in factors:
            flat.extend(f.factors if isinstance(f, CompositeMap) else [f])
        factors = flat
    return CompositeMap(tuple(factors), domain=domain)


def invert_map(fmap: ConformalMap, w, guess=None, *, tol: float = TOL_INV,
               max_iter: int = NEWTON_MAX_ITER):
    """Solve ``fmap(z) = w``.

    Moebius maps are inverted in closed form; everything else by damped
    Newton (step halved while the residual grows).  Raises
    :class:`NoConvergence` when some point fails after ``max_iter`` steps.
    """
    arr = np.asarray(w, dtype=complex)
    scalar = arr.ndim == 0
    flat = arr.ravel()
    if isinstance(fmap, MoebiusMap):
        out = fmap.inverse()._raw(flat)
    elif isinstance(fmap, InverseMap):
        out = fmap.inner._eval(flat, check=False)
    else:
        g = fmap.initial_inverse(flat) if guess is None else np.broadcast_to(
            np.asarray(guess, dtype=complex), arr.shape).ravel().copy()
        out = _invert(fmap, flat, g, tol=tol, max_iter=max_iter)
    return complex(out[0]) if scalar else out.reshape(arr.shape)


def _invert(fmap, w, z0, *, tol=TOL_INV, max_iter=NEWTON_MAX_ITER):
    w = np.asarray(w, dtype=complex).ravel()
    z = np.array(z0, dtype=complex).ravel()
    out = np.empty_like(w)
    inf = np.isinf(w)
    if inf.any():
        to_inf = np.isinf(fmap._raw(np.array([INFINITY])))[0]
        if not to_inf:
            raise NoConvergence("cannot invert at infinity: map does not fix infinity")
        out[inf] = INFINITY
    idx = np.flatnonzero(~inf)
    if idx.size == 0:
        return out
    z_sol, ok = _newton(fmap, w[idx], z[idx], tol, max_iter)
    if not ok.all():
        grid = fmap.chart_grid()
        if grid is not None:
            bad = idx[~ok]
            gv = fmap._raw(grid)
            nearest = np.abs(w[bad][:, None] - gv[None, :]).argmin(axis=1)
            z2, ok2 = _newton(fmap, w[bad], grid[nearest], tol, max_iter)
            z_sol[~ok] = z2
            ok[~ok] = ok2
    if not ok.all():
        bad = w[idx][~ok]
        raise NoConvergence(f"Newton inversion failed for {bad.size} point(s), e.g. w={bad[0]}")
    out[idx] = z_sol
    return out


def _newton(fmap, w, z, tol, max_iter):
    z = z.copy()
    scale = np.maximum(1.0, np.abs(w))
    with np.errstate(all="ignore"):
        r = fmap._raw(z) - w
        for _ in range(max_iter):
            err = np.abs(r)
            active = ~(err < tol * scale)
            if not active.any():
                break
            za, ra = z[active], r[active]
            step = -ra / fmap._deriv(za)
            ea = err[active]
            znew = za + step
            rnew = fmap._raw(znew) - w[active]
            for _ in range(30):
                worse = ~(np.abs(rnew) <= ea)
                if not worse.any():
                    break
                step[worse] *= 0.5
                znew[worse] = za[worse] + step[worse]
                rnew[worse] = fmap._raw(znew[worse]) - w[active][worse]
            z[active], r[active] = znew, rnew
        ok = np.abs(r) < tol * scale
    return z, ok


@dataclass(frozen=True, eq=False)
class BoundaryCorrespondence:
    """Degree +-1 circle map ``eta(theta) = direction*theta + Re sum_k p_k e^{ik theta}``."""

    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=complex))
    k_min: int = 0
    direction: int = 1

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "k_min", int(self.k_min))
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")
        object.__setattr__(self, "direction", int(self.direction))

    @classmethod
    def identity(cls) -> BoundaryCorrespondence:
        return cls()

    @classmethod
    def rotation(cls, alpha: float) -> BoundaryCorrespondence:
        return cls([alpha], k_min=0)

    @classmethod
    def from_samples(cls, values: np.ndarray, order: int, direction: int = 1) -> BoundaryCorrespondence:
        """Project samples of ``eta`` on uniform nodes (values already unwrapped)."""
        values = np.asarray(values, dtype=float)
        t = uniform_nodes(values.size)
        periodic = values - direction * t
        return cls(fourier_project(periodic, order), k_min=-order, direction=direction)

    @classmethod
    def from_function(cls, fn, order: int, m: int | None = None, direction: int = 1) -> BoundaryCorrespondence:
        m = m or max(4 * order + 4, 64)
        return cls.from_samples(fn(uniform_nodes(m)), order, direction)

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_min + self.coeffs.size)

    @property
    def order(self) -> int:
        return int(max(abs(self.k_min), abs(self.k_min + self.coeffs.size - 1)))

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = self.direction * theta + trig_eval(self.coeffs, self.k_min, theta).real
        return float(out) if out.ndim == 0 else out

    def derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = self.direction + trig_eval(1j * self.ks * self.coeffs, self.k_min, theta).real
        return float(out) if out.ndim == 0 else out

    def second_derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        return trig_eval(-(self.ks ** 2) * self.coeffs, self.k_min, theta).real

    def __eq__(self, other):
        if not isinstance(other, BoundaryCorrespondence):
            return NotImplemented
        return (self.k_min == other.k_min and self.direction == other.direction
                and np.array_equal(self.coeffs, other.coeffs))

    __hash__ = None

    def min_slope(self, m: int | None = None) -> float:
        """Smallest value of ``direction * eta'`` on ``m`` samples."""
        m = m or sample_count(self.order)
        return float((self.direction * self.derivative(uniform_nodes(m))).min())

    def is_monotone(self, m: int | None = None) -> bool:
        return self.min_slope(m) > 0

    def periodic_part(self, theta):
        return self(theta) - self.direction * np.asarray(theta, dtype=float)

    def solve(self, s, *, tol: float = 1e-14, max_iter: int = 60) -> np.ndarray:
        """Parameters ``theta`` with ``eta(theta) = s`` (vectorised, safeguarded Newton)."""
        s = np.asarray(s, dtype=float)
        d = self.direction
        p0 = float(self.coefficient(0).real)
        theta = d * (s - p0)
        for _ in range(max_iter):
            r = self(theta) - s
            if np.all(np.abs(r) < tol * np.maximum(1.0, np.abs(s))):
                break
            slope = self.derivative(theta)
            step = -r / slope
            # the map moves by at most max|eta'|*|step|; keep steps within one turn
            theta = theta + np.clip(step, -1.0, 1.0)
        else:
            if np.max(np.abs(self(theta) - s)) > 1e-10:
                raise NoConvergence("could not invert boundary correspondence")
        return theta

    def coefficient(self, k: int) -> complex:
        j = k - self.k_min
        return complex(self.coeffs[j]) if 0 <= j < self.coeffs.size else 0j

    def inverse(self, order: int | None = None, m: int | None = None) -> BoundaryCorrespondence:
        order = order or max(self.order, 8)
        m = m or 4 * order + 4
        s = uniform_nodes(m)
        theta = self.solve(s)
        return BoundaryCorrespondence.from_samples(theta, order, self.direction)

    def compose(self, inner: BoundaryCorrespondence, order: int | None = None) -> BoundaryCorrespondence:
        """``self o inner`` re-projected to ``order`` (default: the larger order)."""
        order = order or max(self.order, inner.order, 8)
        m = 4 * order + 4
        t = uniform_nodes(m)
        return BoundaryCorrespondence.from_samples(self(inner(t)), order, self.direction * inner.direction)

    def blend(self, t: float) -> BoundaryCorrespondence:
        """Linear homotopy ``(1-t)*theta + t*eta(theta)`` from the identity."""
        if self.direction != 1:
            raise ValueError("blending is only defined for orientation-preserving maps")
        return BoundaryCorrespondence(t * self.coeffs, self.k_min, 1)


def boundary_correspondence(fmap: ConformalMap, source: AnalyticCurve, target: AnalyticCurve,
                            *, order: int | None = None, tol: float = TOL_CORR) -> BoundaryCorrespondence:
    """Correspondence ``eta`` with ``target(eta(theta)) = fmap(source(theta))``.

    Raises :class:`TraceMismatch` when the image of the source trace is not on
    the target trace (distance above ``tol`` times the target diameter).
    """
    order = order or max(source.order, target.order)
    m = max(4 * order + 4, 64)
    t = uniform_nodes(m)
    w = np.asarray(fmap(source(t)), dtype=complex)
    s = project_to_curve(target, w)
    gap = np.abs(target(s) - w)
    limit = tol * target.diameter
    if gap.max() > limit:
        raise TraceMismatch(f"image of source trace is {gap.max():.3e} from the target trace")
    s = np.unwrap(s)
    total = s[-1] - s[0] + (s[1] - s[0])
    direction = 1 if total > 0 else -1
    eta = BoundaryCorrespondence.from_samples(s, order, direction)
    return eta


def project_to_curve(curve: AnalyticCurve, w: np.ndarray, *, guess=None, iters: int = 30) -> np.ndarray:
    """Parameters of the nearest trace points to ``w`` (Newton on the foot-point condition)."""
    w = np.asarray(w, dtype=complex).ravel()
    if guess is None:
        mm = 8 * sample_count(curve.order)
        tg = uniform_nodes(mm)
        g = curve(tg)
        s = np.empty(w.size)
        for a in range(0, w.size, 256):
            s[a:a + 256] = tg[np.abs(w[a:a + 256, None] - g[None, :]).argmin(axis=1)]
    else:
        s = np.array(guess, dtype=float).ravel()
    h = 2 * np.pi / (8 * sample_count(curve.order))
    for _ in range(iters):
        diff = curve(s) - w
        d1 = curve.derivative(s)
        d2 = curve.second_derivative(s)
        f = (np.conj(diff) * d1).real
        fp = np.abs(d1) ** 2 + (np.conj(diff) * d2).real
        step = -f / fp
        step = np.clip(step, -h, h) if _ < 3 else step
        s = s + step
        if np.all(np.abs(step) < 1e-15):
            break
    return s


@dataclass
class InjectivityReport:
    passed: bool
    degrees: np.ndarray
    pole_count: int
    min_derivative: float
    clearance: float
    n_probes: int
    detail: str = ""

    def as_dict(self) -> dict:
        return {"passed": self.passed, "pole_count": self.pole_count,
                "degree_min": int(self.degrees.min()) if self.degrees.size else 0,
                "degree_max": int(self.degrees.max()) if self.degrees.size else 0,
                "min_derivative": self.min_derivative, "clearance": self.clearance,
                "n_probes": self.n_probes, "detail": self.detail}


def verify_injective(fmap, domain: DomainSpec, probes: np.ndarray | None = None,
                     *, samples: int | None = None) -> InjectivityReport:
    """Argument-principle certificate that ``fmap`` is injective on ``domain``.

    The preimage count of a value ``w`` equals the winding of the mapped
    boundary (domain on the left) about ``w`` plus the number ``P`` of poles in
    the domain.  ``P`` is read off at a point just to the right of a mapped
    boundary curve, where an injective map has no preimages; every probe image
    must then have count exactly 1.
    """
    def fail(msg):
        return InjectivityReport(False, np.zeros(0, int), 0, 0.0, 0.0, 0, msg)

    if probes is None:
        probes = domain.interior_probes()
    probes = np.asarray(probes, dtype=complex)
    if probes.size == 0:
        return fail("no interior probes")
    polys, dpolys = [], []
    try:
        for c in domain.curves:
            m = samples or max(4 * sample_count(c.order), 1024)
            t = uniform_nodes(m) * c.orientation
            pts = c(t)
            polys.append(np.asarray(fmap(pts), dtype=complex))
            dpolys.append(np.abs(np.asarray(fmap.derivative(pts))))
        images = np.asarray(fmap(probes), dtype=complex)
        dprobe = np.abs(np.asarray(fmap.derivative(probes)))
    except (OutOfChart, NoConvergence) as exc:
        return fail(f"map not evaluable on the domain: {exc}")
    if any(not np.all(np.isfinite(p)) for p in polys):
        return fail("boundary image passes through infinity")

    finite = np.isfinite(images)
    scale = max(float(np.ptp(np.concatenate(polys).real) + np.ptp(np.concatenate(polys).imag)), 1e-300)
    # |f'| relative to (image size / domain size)
    ders = np.concatenate(dpolys + [dprobe[finite]])
    min_der = float(ders.min()) * domain.scale / scale

    poles = set()
    for poly in polys[:1]:
        for k in np.linspace(0, poly.size, 9, dtype=int)[:-1]:
            v, u = poly[k], poly[(k + 1) % poly.size]
            seg = u - v
            w_out = 0.5 * (u + v) - 0.25j * seg
            total = sum(int(polygon_winding(p, w_out)[0]) for p in polys)
            poles.add(-total)
    if len(poles) != 1:
        return fail(f"inconsistent outside counts {sorted(poles)}; boundary image not simple")
    pole_count = poles.pop()

    wind = np.zeros(images.shape, dtype=int)
    fin_img = images[finite]
    for p in polys:
        wind[finite] += polygon_winding(p, fin_img)
    # infinity is an interior image: the far field winding is 0, so count = P
    wind[~finite] = 0
    degrees = wind + pole_count
    clear = math.inf
    allpts = np.concatenate(polys)
    if fin_img.size:
        for a in range(0, fin_img.size, 256):
            clear = min(clear, float(np.abs(fin_img[a:a + 256, None] - allpts[None, :]).min()))
    clear /= scale
    passed = bool(np.all(degrees == 1) and min_der > 1e-10)
    detail = f"degrees in [{degrees.min()}, {degrees.max()}], poles={pole_count}"
    return InjectivityReport(passed, degrees, pole_count, min_der, clear, int(probes.size), detail)


def fit_moebius(x: np.ndarray, y: np.ndarray) -> tuple[MoebiusMap, float]:
    """Least-squares Moebius map with ``m(x) ~ y``; returns the map and the max defect.

    Solves the homogeneous linear system ``a x + b - c x y - d y = 0`` in
    centred, scaled coordinates by SVD.
    """
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    if x.size < 4:
        raise ValueError("need at least four point pairs")
    cx, cy = x.mean(), y.mean()
    sx = float(np.abs(x - cx).max()) or 1.0
    sy = float(np.abs(y - cy).max()) or 1.0
    xs, ys = (x - cx) / sx, (y - cy) / sy
    rows = np.stack([xs, np.ones_like(xs), -xs * ys, -ys], axis=1)
    _, _, vh = np.linalg.svd(rows)
    a, b, c, d = np.conj(vh[-1])
    core = MoebiusMap(a, b, c, d)
    pre = MoebiusMap.affine(1 / sx, -cx / sx)
    post = MoebiusMap.affine(sy, cy)
    m = pre.then(core).then(post)
    resid = float(np.abs(m(x) - y).max())
    return m, resid


def moebius_residual(m: MoebiusMap, x, y) -> float:
    return float(np.abs(m(np.asarray(x)) - np.asarray(y)).max())


def as_curve_image(fmap: ConformalMap, curve: AnalyticCurve, order: int, m: int | None = None) -> tuple[AnalyticCurve, float]:
    """Fourier projection of ``fmap(curve(theta))`` and its off-node defect."""
    m = m or max(4 * order + 4, 256)
    t = uniform_nodes(m)
    image = AnalyticCurve.from_samples(np.asarray(fmap(curve(t))), order, curve.orientation)
    t_mid = t + np.pi / m
    defect = float(np.abs(image(t_mid) - np.asarray(fmap(curve(t_mid)))).max())
    return image, defect
