"""Function model for f, exact complex jets and the objective F = |f|^2 / 2.

A FunctionSpec is one of five frozen dataclasses. Every spec knows how to
evaluate its own derivatives exactly; the module-level functions turn those
jets into the gradient and Hessian of F.
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, Overflow, PoleAt
from .linalg2 import Sym2

logger = logging.getLogger(__name__)

POLE_EPS = 1e-12
OVERFLOW_CAP = 1e150
ROOT_TOL = 1e-8
CRIT_TOL = 1e-8
# Taylor coefficients below this (relative) count as vanishing
ORDER_EPS = 1e-9
_LOG_CAP = math.log(OVERFLOW_CAP)


class PointKind(Enum):
    ROOT = "Root"
    CRITICAL = "CriticalNotRoot"
    POLE = "Pole"
    REGULAR = "Regular"


@dataclass(frozen=True)
class PointTolerance:
    root: float = ROOT_TOL
    crit: float = CRIT_TOL


@dataclass(frozen=True)
class Jet2:
    """(f, f', f'') at one point."""

    f: complex
    df: complex
    d2f: complex


@dataclass(frozen=True)
class GradHess:
    grad: tuple
    hess: Sym2
    fval: float


def as_point(z):
    """Coerce to complex and refuse NaN/inf."""
    if isinstance(z, (list, tuple)):
        z = complex(z[0], z[1])
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"point must be finite, got {z}")
    return z


def point_to_list(z):
    return [float(z.real), float(z.imag)]


def _check_finite(z, values):
    for value in values:
        magnitude = abs(value)
        if not magnitude <= OVERFLOW_CAP:
            raise Overflow(z, magnitude)


def _factorial_scale(values):
    return [v * math.factorial(k) for k, v in enumerate(values)]


# ---------------------------------------------------------------------------
# polynomial variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Coeffs:
    """sum_k coeffs[k] * z**k, lowest degree first."""

    coeffs: tuple
    kind = "coeffs"

    def __post_init__(self):
        coeffs = tuple(as_point(c) for c in self.coeffs)
        if not coeffs or coeffs[-1] == 0:
            raise ValueError("leading coefficient must be nonzero")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def derivatives(self, z, order):
        """Return [P(z), P'(z), ..., P^(order)(z)] by Horner's scheme."""
        vals = [0j] * (order + 1)
        for c in reversed(self.coeffs):
            for k in range(order, 0, -1):
                vals[k] = vals[k] * z + vals[k - 1]
            vals[0] = vals[0] * z + c
        return _factorial_scale(vals)

    def scale(self, z):
        r = abs(z)
        return sum(abs(c) * r**k for k, c in enumerate(self.coeffs))

    def to_coeffs(self):
        return np.array(self.coeffs, dtype=complex)

    def to_dict(self):
        return {"kind": self.kind, "coeffs": [point_to_list(c) for c in self.coeffs]}


@dataclass(frozen=True)
class RootsProduct:
    """leading * prod_j (z - roots[j])."""

    roots: tuple
    leading: complex = 1 + 0j
    kind = "roots_product"

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(as_point(r) for r in self.roots))
        object.__setattr__(self, "leading", as_point(self.leading))
        if self.leading == 0:
            raise ValueError("leading coefficient must be nonzero")

    @property
    def degree(self):
        return len(self.roots)

    def derivatives(self, z, order):
        """Derivatives up to third order via the logarithmic derivative.

        At (or numerically on top of) a root the sums blow up, so the
        product rule is accumulated factor by factor instead.
        """
        gaps = [z - r for r in self.roots]
        if any(abs(g) <= 1e-30 * (1.0 + abs(z)) for g in gaps):
            return self._leibniz(gaps, order)
        p = self.leading
        s1 = s2 = s3 = 0j
        for g in gaps:
            p *= g
            inv = 1.0 / g
            s1 += inv
            s2 += inv * inv
            s3 += inv * inv * inv
        vals = [p, p * s1, p * (s1 * s1 - s2), p * (s1**3 - 3.0 * s1 * s2 + 2.0 * s3)]
        return vals[: order + 1]

    def _leibniz(self, gaps, order):
        p, d1, d2, d3 = self.leading, 0j, 0j, 0j
        for g in gaps:
            p, d1, d2, d3 = p * g, d1 * g + p, d2 * g + 2.0 * d1, d3 * g + 3.0 * d2
        return [p, d1, d2, d3][: order + 1]

    def scale(self, z):
        r = abs(z)
        out = abs(self.leading)
        for root in self.roots:
            out *= r + abs(root)
        return out

    def to_coeffs(self):
        # numpy.polynomial wants lowest degree first
        return np.polynomial.polynomial.polyfromroots(self.roots) * self.leading

    def to_dict(self):
        return {
            "kind": self.kind,
            "roots": [point_to_list(r) for r in self.roots],
            "leading": point_to_list(self.leading),
        }


POLYNOMIALS = (Coeffs, RootsProduct)


def derivative_poly(p):
    """P' as a Coeffs spec."""
    c = np.polynomial.polynomial.polyder(p.to_coeffs())
    if len(c) == 0 or not np.any(c):
        raise ValueError("derivative of a constant polynomial is zero")
    return Coeffs(tuple(complex(x) for x in np.trim_zeros(c, "b")))


def _require_polynomial(p, name):
    if not isinstance(p, POLYNOMIALS):
        raise ValueError(f"{name} must be a polynomial spec, got {type(p).__name__}")


def _quotient_jet(z, P, Q):
    """Jet of P/Q from value lists [P, P', P''] and [Q, Q', Q'']."""
    q0, q1, q2 = Q
    g0 = 1.0 / q0
    g1 = -q1 * g0 * g0
    g2 = (2.0 * q1 * q1 - q0 * q2) * g0 * g0 * g0
    p0, p1, p2 = P
    return (p0 * g0, p1 * g0 + p0 * g1, p2 * g0 + 2.0 * p1 * g1 + p0 * g2)


@dataclass(frozen=True)
class Rational:
    num: object
    den: object
    kind = "rational"

    def __post_init__(self):
        _require_polynomial(self.num, "num")
        _require_polynomial(self.den, "den")

    def jet(self, z):
        Q = self.den.derivatives(z, 2)
        if abs(Q[0]) <= POLE_EPS * self.den.scale(z):
            raise PoleAt(z)
        return _quotient_jet(z, self.num.derivatives(z, 2), Q)

    def value(self, z):
        q = self.den.derivatives(z, 0)[0]
        if abs(q) <= POLE_EPS * self.den.scale(z):
            raise PoleAt(z)
        return self.num.derivatives(z, 0)[0] / q

    def to_dict(self):
        return {"kind": self.kind, "num": self.num.to_dict(), "den": self.den.to_dict()}


@dataclass(frozen=True)
class NewtonQuotient:
    """P / P'. The derivative is expanded once, at construction.

    At a root of P of order m >= 2 both P and P' vanish; the quotient has a
    removable singularity there with f = 0, f' = 1/m.
    """

    p: object
    dp: object = field(init=False, repr=False, compare=False)
    kind = "newton_quotient"

    def __post_init__(self):
        _require_polynomial(self.p, "p")
        if self.p.degree < 1:
            raise ValueError("P must have degree >= 1")
        object.__setattr__(self, "dp", derivative_poly(self.p))

    def _vanishes(self, P, z):
        return abs(P[1]) <= POLE_EPS * self.dp.scale(z)

    def _multiple_root_jet(self, z):
        """Jet at a root of order m: P/P' = h/m - rho h^2/m^2 + ... with h = z - r."""
        m = local_order(self.p, z)
        taylor = taylor_coefficients(self.p, z, self.p.degree)
        rho = taylor[m + 1] / taylor[m] if m + 1 < len(taylor) else 0j
        return (0j, complex(1.0 / m), -2.0 * rho / (m * m))

    def _removable(self, P, z):
        return abs(P[0]) <= POLE_EPS * self.p.scale(z)

    def jet(self, z):
        P = self.p.derivatives(z, 3)
        if self._vanishes(P, z):
            if self._removable(P, z):
                return self._multiple_root_jet(z)
            raise PoleAt(z)
        return _quotient_jet(z, P[:3], P[1:])

    def value(self, z):
        P = self.p.derivatives(z, 1)
        if self._vanishes(P, z):
            if self._removable(P, z):
                return 0j
            raise PoleAt(z)
        return P[0] / P[1]

    def to_dict(self):
        return {"kind": self.kind, "p": self.p.to_dict()}


@dataclass(frozen=True)
class ExpAffine:
    """exp(a*z) + b."""

    a: complex
    b: complex
    kind = "exp_affine"

    def __post_init__(self):
        object.__setattr__(self, "a", as_point(self.a))
        object.__setattr__(self, "b", as_point(self.b))
        if self.a == 0:
            raise ValueError("a must be nonzero, otherwise f is constant")

    def _exp(self, z):
        az = self.a * z
        if az.real > _LOG_CAP:
            raise Overflow(z, math.inf)
        return cmath.exp(az)

    def jet(self, z):
        e = self._exp(z)
        return (e + self.b, self.a * e, self.a * self.a * e)

    def value(self, z):
        return self._exp(z) + self.b

    def to_dict(self):
        return {"kind": self.kind, "a": point_to_list(self.a), "b": point_to_list(self.b)}


SPEC_KINDS = {cls.kind: cls for cls in (RootsProduct, Coeffs, Rational, NewtonQuotient, ExpAffine)}


def spec_from_dict(data, where="function"):
    """Build a FunctionSpec from its canonical JSON form.

    Raises:
        ConfigError: naming ``where`` when the dict is malformed.
    """
    try:
        kind = data["kind"]
        if kind == "roots_product":
            return RootsProduct(tuple(as_point(r) for r in data["roots"]), as_point(data.get("leading", [1, 0])))
        if kind == "coeffs":
            return Coeffs(tuple(as_point(c) for c in data["coeffs"]))
        if kind == "rational":
            return Rational(spec_from_dict(data["num"], f"{where}.num"), spec_from_dict(data["den"], f"{where}.den"))
        if kind == "newton_quotient":
            return NewtonQuotient(spec_from_dict(data["p"], f"{where}.p"))
        if kind == "exp_affine":
            return ExpAffine(as_point(data["a"]), as_point(data["b"]))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as err:
        raise ConfigError(where, str(err)) from err
    raise ConfigError(where, f"unknown function kind {data.get('kind')!r}")


def spec_to_dict(spec):
    return spec.to_dict()


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def eval_jet(spec, z):
    """Evaluate (f, f', f'') exactly.

    Args:
        spec: any FunctionSpec
        z: a finite complex point

    Returns:
        Jet2 at z.

    Raises:
        PoleAt: a denominator vanishes within POLE_EPS of its magnitude.
        Overflow: a magnitude passes OVERFLOW_CAP.
    """
    z = as_point(z)
    if isinstance(spec, POLYNOMIALS):
        values = spec.derivatives(z, 2)
    else:
        values = spec.jet(z)
    _check_finite(z, values)
    return Jet2(*values)


def eval_f(spec, z):
    """f(z) alone; cheaper than a jet for line searches."""
    if isinstance(spec, POLYNOMIALS):
        value = spec.derivatives(z, 0)[0]
    else:
        value = spec.value(z)
    _check_finite(z, (value,))
    return value


def fvalue(spec, z):
    """F(z) = |f(z)|^2 / 2."""
    f = eval_f(spec, z)
    return 0.5 * (f.real * f.real + f.imag * f.imag)


def grad_F(jet):
    """Gradient of F as (Re, Im) of f * conj(f')."""
    g = jet.f * jet.df.conjugate()
    return (g.real, g.imag)


def hess_F(jet):
    """Hessian of F assembled from the real partials of u + iv.

    Cauchy-Riemann recovers all eight partials from f' and f''.
    """
    u, v = jet.f.real, jet.f.imag
    u_x, v_x = jet.df.real, jet.df.imag
    u_y, v_y = -v_x, u_x
    u_xx, v_xx = jet.d2f.real, jet.d2f.imag
    u_xy, v_xy = -v_xx, u_xx
    u_yy, v_yy = -u_xx, -v_xx
    h11 = u * u_xx + v * v_xx + u_x * u_x + v_x * v_x
    h12 = u * u_xy + v * v_xy + u_x * u_y + v_x * v_y
    h22 = u * u_yy + v * v_yy + u_y * u_y + v_y * v_y
    return Sym2(h11, h12, h22)


def grad_hess(jet):
    f = jet.f
    return GradHess(grad_F(jet), hess_F(jet), 0.5 * (f.real * f.real + f.imag * f.imag))


def classify_jet(jet, tol=PointTolerance()):
    if abs(jet.f) <= tol.root:
        return PointKind.ROOT
    if abs(jet.df) <= tol.crit:
        return PointKind.CRITICAL
    return PointKind.REGULAR


def classify_point(spec, z, tol=PointTolerance()):
    """Root, CriticalNotRoot, Pole or Regular at z."""
    try:
        jet = eval_jet(spec, z)
    except PoleAt:
        return PointKind.POLE
    except Overflow:
        logger.debug("overflow while classifying %s", z)
        # only the quotients blow up at finite points; entire f is just large there
        if isinstance(spec, (Rational, NewtonQuotient)):
            return PointKind.POLE
        return PointKind.REGULAR
    return classify_jet(jet, tol)


# ---------------------------------------------------------------------------
# transformations and polynomial utilities
# ---------------------------------------------------------------------------


def compose_linear(spec, alpha):
    """The spec of g(z) = f(alpha * z), alpha != 0."""
    alpha = as_point(alpha)
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    if isinstance(spec, Coeffs):
        return Coeffs(tuple(c * alpha**k for k, c in enumerate(spec.coeffs)))
    if isinstance(spec, RootsProduct):
        return RootsProduct(tuple(r / alpha for r in spec.roots), spec.leading * alpha**spec.degree)
    if isinstance(spec, Rational):
        return Rational(compose_linear(spec.num, alpha), compose_linear(spec.den, alpha))
    if isinstance(spec, NewtonQuotient):
        # P(az)/P'(az) is no longer a Newton quotient of P(az): keep it rational
        return Rational(compose_linear(spec.p, alpha), compose_linear(spec.dp, alpha))
    if isinstance(spec, ExpAffine):
        return ExpAffine(spec.a * alpha, spec.b)
    raise TypeError(f"cannot compose {type(spec).__name__}")


def conjugate_spec(spec):
    """The spec of conj(f(conj(z)))."""
    if isinstance(spec, Coeffs):
        return Coeffs(tuple(c.conjugate() for c in spec.coeffs))
    if isinstance(spec, RootsProduct):
        return RootsProduct(tuple(r.conjugate() for r in spec.roots), spec.leading.conjugate())
    if isinstance(spec, Rational):
        return Rational(conjugate_spec(spec.num), conjugate_spec(spec.den))
    if isinstance(spec, NewtonQuotient):
        return NewtonQuotient(conjugate_spec(spec.p))
    if isinstance(spec, ExpAffine):
        return ExpAffine(spec.a.conjugate(), spec.b.conjugate())
    raise TypeError(f"cannot conjugate {type(spec).__name__}")


def is_real_spec(spec):
    return conjugate_spec(spec) == spec


def taylor_coefficients(spec, z, n):
    """a_0 .. a_n of the expansion of a polynomial spec around z."""
    _require_polynomial(spec, "spec")
    z = as_point(z)
    if isinstance(spec, RootsProduct):
        spec = Coeffs(tuple(complex(c) for c in spec.to_coeffs()))
    vals = spec.derivatives(z, n)
    return [v / math.factorial(k) for k, v in enumerate(vals)]


def local_order(spec, z, eps=ORDER_EPS):
    """Smallest k >= 1 with a nonvanishing Taylor coefficient of f - f(z)."""
    coeffs = taylor_coefficients(spec, z, spec.degree)
    size = max(1.0, max(abs(c) for c in coeffs))
    for k, c in enumerate(coeffs[1:], start=1):
        if abs(c) > eps * size:
            return k
    return spec.degree


def polynomial_roots(coeffs):
    """Roots from the eigenvalues of the companion matrix (lowest degree first)."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    if len(c) < 2:
        return []
    companion = np.polynomial.polynomial.polycompanion(c)
    return [complex(r) for r in np.linalg.eigvals(companion)]


def _cluster(points, eps):
    groups = []
    for p in sorted(points, key=lambda w: (w.real, w.imag)):
        for group in groups:
            if abs(group[0] - p) <= eps:
                group.append(p)
                break
        else:
            groups.append([p])
    return [sum(g) / len(g) for g in groups]


def spec_roots(spec, cluster_eps=1e-6):
    """Distinct roots of a polynomial spec."""
    _require_polynomial(spec, "spec")
    if isinstance(spec, RootsProduct):
        return _cluster(list(spec.roots), cluster_eps)
    return _cluster(polynomial_roots(spec.to_coeffs()), cluster_eps)


@dataclass(frozen=True)
class CriticalPoint:
    z: complex
    order: int
    value: complex


def critical_points(spec, tol=PointTolerance(), cluster_eps=1e-4):
    """Critical points of a polynomial spec that are not roots, with their order d.

    Eigenvalues of the companion matrix scatter around a multiple root of P'
    by about eps**(1/m); the centroid of the scattered cluster is accurate.
    """
    _require_polynomial(spec, "spec")
    dp = derivative_poly(spec)
    candidates = _cluster(polynomial_roots(dp.to_coeffs()), cluster_eps)
    found = []
    for z in candidates:
        value = spec.derivatives(z, 0)[0]
        if abs(value) <= tol.root:
            continue
        found.append(CriticalPoint(z, local_order(spec, z), value))
    return found
