"""Local dynamics near critical points and roots.

The linear model phi1 of a d-fold saddle, probes that run the real BNQN step
around a critical point and compare it with that model, and estimators for
the local contraction rate at a root.
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import BnqnParams, bnqn_step
from .errors import ArmijoFloor, BnqnError, InsufficientTail, OriginUndefined, ProbeFailed
from .funcs import (
    POLYNOMIALS,
    RootsProduct,
    PointKind,
    as_point,
    classify_point,
    critical_points,
    eval_jet,
    hess_F,
    local_order,
    point_to_list,
    spec_roots,
    taylor_coefficients,
)
from .linalg2 import eigen_sym2

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
# sector probe orbits stalling this close to z* (relative to r0) count as converged
STALL_DEPTH = 1e-2


def principal_angle(z):
    """arg z on the branch (0, 2*pi]."""
    theta = math.atan2(z.imag, z.real)
    return theta if theta > 0 else theta + TWO_PI


# ---------------------------------------------------------------------------
# the linear model
# ---------------------------------------------------------------------------


def phi1(z, d, strict=False):
    """z - conj(z)^(d-1) / ((d-1) |z|^(d-2)).

    The map extends continuously to 0; strict=True refuses the origin instead.
    """
    z = as_point(z)
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if z == 0:
        if strict and d >= 3:
            raise OriginUndefined("phi1 divides by |z|^(d-2), undefined at 0")
        return 0j
    r = abs(z)
    return z - z.conjugate() ** (d - 1) / ((d - 1) * r ** (d - 2))


class RayKind(Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"


@dataclass(frozen=True)
class RayReport:
    d: int
    j: int
    multiplier: float
    kind: RayKind

    def to_dict(self):
        return {"d": self.d, "j": self.j, "multiplier": self.multiplier, "kind": self.kind.value}


def ray_multiplier(d, j):
    """phi1 restricted to the ray arg z = pi*j/d is multiplication by this factor."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if not 0 <= j < 2 * d:
        raise ValueError(f"j must lie in [0, {2 * d}), got {j}")
    sign = 1 if j % 2 == 0 else -1
    kind = RayKind.STABLE if sign == 1 else RayKind.UNSTABLE
    return RayReport(d, j, 1.0 - sign / (d - 1), kind)


def ray_fit(d, j, r0=0.1, steps=20):
    """Measure the multiplier on ray j by iterating phi1 and fitting log|z_n|."""
    z = r0 * cmath.exp(1j * math.pi * j / d)
    logs = []
    for _ in range(steps + 1):
        if z == 0:
            break
        logs.append(math.log(abs(z)))
        z = phi1(z, d)
    if len(logs) < 2:
        # the ray collapsed to 0 in one step
        return 0.0
    slope = np.polyfit(np.arange(len(logs)), np.array(logs), 1)[0]
    return float(math.exp(slope))


class ProbeClass(Enum):
    LEFT_DISC = "LeftDisc"
    CONVERGED = "ConvergedToCritical"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class SaddleProbeResult:
    start: complex
    exit_step: object
    angle_sequence: list
    final_classification: ProbeClass
    sector_invariant: bool = True
    toward_unstable: bool = True

    def to_dict(self):
        return {
            "start": point_to_list(self.start),
            "exit_step": self.exit_step,
            "angle_sequence": list(self.angle_sequence),
            "final_classification": self.final_classification.value,
            "sector_invariant": self.sector_invariant,
            "toward_unstable": self.toward_unstable,
        }


def _distance_to_odd_ray(theta, d):
    """Angular distance from theta to the nearest ray pi*(2k+1)/d."""
    step = math.pi / d
    offset = (theta - step) % (2.0 * step)
    return min(offset, 2.0 * step - offset)


def sector_probe_phi1(z0, d, max_iter=200, exit_radius=1.0, angle_tol=1e-12):
    """Iterate phi1 from z0 and watch its angle.

    Inside a sector between a stable and an unstable ray the orbit keeps its
    sector, its angle moves monotonically toward the unstable ray, and the
    modulus grows until the orbit leaves the disc of radius exit_radius.
    """
    z = as_point(z0)
    if z == 0:
        raise OriginUndefined("probe start must be nonzero")
    width = math.pi / d
    sector = math.floor(principal_angle(z) / width - 1e-15)
    angles = [principal_angle(z)]
    invariant = True
    toward = True
    exit_step = None
    outcome = ProbeClass.UNDECIDED
    for n in range(1, max_iter + 1):
        z = phi1(z, d)
        if abs(z) <= 1e-12 * abs(z0):
            outcome = ProbeClass.CONVERGED
            break
        theta = principal_angle(z)
        previous = _distance_to_odd_ray(angles[-1], d)
        if _distance_to_odd_ray(theta, d) > previous + angle_tol and previous > angle_tol:
            toward = False
        if math.floor(theta / width - 1e-15) != sector and _distance_to_odd_ray(theta, d) > angle_tol:
            invariant = False
        angles.append(theta)
        if abs(z) > exit_radius:
            exit_step = n
            outcome = ProbeClass.LEFT_DISC
            break
    return SaddleProbeResult(as_point(z0), exit_step, angles, outcome, invariant, toward)


# ---------------------------------------------------------------------------
# probes of the real BNQN step near a critical point
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalModel:
    """f = a0 + ad (z - z*)^d + a_next (z - z*)^(d+1) + ... around z*."""

    z_star: complex
    d: int
    a0: complex
    ad: complex
    a_next: complex

    @property
    def stable_angle(self):
        """Direction of the first stable ray: where ad * u^d / a0 is positive."""
        return (cmath.phase(self.a0) - cmath.phase(self.ad)) / self.d

    def hessian_scale(self, r):
        return abs(self.a0 * self.ad) * self.d * (self.d - 1) * r ** (self.d - 2)

    def offset_from_unstable(self, u):
        """|t - pi| with t = d * (arg u - stable_angle) reduced to [0, 2*pi)."""
        t = (self.d * (cmath.phase(u) - self.stable_angle)) % TWO_PI
        return abs(t - math.pi)

    def first_order_ratio(self, u):
        d = self.d
        t = d * (cmath.phase(u) - self.stable_angle)
        return math.sqrt(1.0 + 1.0 / (d - 1) ** 2 - 2.0 * math.cos(t) / (d - 1))


def local_model(spec, z_star):
    if not isinstance(spec, POLYNOMIALS):
        raise ValueError("local probes need a polynomial spec")
    z_star = as_point(z_star)
    d = local_order(spec, z_star)
    coeffs = taylor_coefficients(spec, z_star, max(spec.degree, d + 1))
    a_next = coeffs[d + 1] if d + 1 < len(coeffs) else 0j
    return LocalModel(z_star, d, coeffs[0], coeffs[d], a_next)


def default_radius(spec, z_star, factor=1e-3):
    """factor times the distance from z* to the nearest other root or critical point."""
    others = list(spec_roots(spec)) + [c.z for c in critical_points(spec)]
    distances = [abs(p - z_star) for p in others if abs(p - z_star) > 1e-9]
    return factor * (min(distances) if distances else 1.0)


@dataclass
class LocalSample:
    z: complex
    z_next: complex
    delta_index: int
    gamma: float
    cap_active: bool
    eigenvalues: tuple
    ratio: float
    offset_from_unstable: float

    def to_dict(self):
        return {
            "z": point_to_list(self.z),
            "z_next": point_to_list(self.z_next),
            "delta_index": self.delta_index,
            "gamma": self.gamma,
            "cap_active": self.cap_active,
            "eigenvalues": list(self.eigenvalues),
            "ratio": self.ratio,
            "offset_from_unstable": self.offset_from_unstable,
        }


@dataclass
class LocalProbeReport:
    model: LocalModel
    r0: float
    d_estimate: float
    samples: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures

    def fraction(self, predicate):
        if not self.samples:
            return 0.0
        return sum(1 for s in self.samples if predicate(s)) / len(self.samples)

    def to_dict(self):
        m = self.model
        return {
            "z_star": point_to_list(m.z_star),
            "d": m.d,
            "d_estimate": self.d_estimate,
            "a0": point_to_list(m.a0),
            "ad": point_to_list(m.ad),
            "r0": self.r0,
            "delta0_fraction": self.fraction(lambda s: s.delta_index == 0),
            "full_step_fraction": self.fraction(lambda s: not s.cap_active),
            "passed": self.passed,
            "failures": list(self.failures),
            "samples": [s.to_dict() for s in self.samples],
        }


def repulsion_bounds(d):
    """(guaranteed sector-wide factor, sharper factor, half-width of the sharper sub-sector).

    The sector is |arg u - unstable ray| < pi/(2d); in terms of t = d*arg u
    the sub-sector is |t - pi| <= the returned half-width.
    """
    sector_wide = math.sqrt(1.0 + 1.0 / (d - 1) ** 2)
    sharp = (2 * d - 1) / (2 * d - 2)
    half_width = math.acos(0.5 - 3.0 / (8.0 * (d - 1)))
    return sector_wide, sharp, half_width


def _eigen_at(spec, z):
    eig = eigen_sym2(hess_F(eval_jet(spec, z)))
    return eig.lam1, eig.lam2


def bnqn_local_probe(spec, z_star, r0=None, samples=360, params=BnqnParams(), strict=True, margin=1e-3):
    """Sample the BNQN step on a circle around a critical point.

    Every sample must select delta_0, accept the full step gamma0 and leave
    the theta cap inactive; the Hessian eigenvalues must match the local
    model within 5%; samples in the repelling sector must move away by the
    bounds of repulsion_bounds and samples near a stable ray must move in.

    Args:
        spec: a polynomial FunctionSpec
        z_star: a critical point of f that is not a root
        r0: sampling radius; default_radius(spec, z_star) when omitted
        samples: number of points, at angles 2*pi*(k + 0.5)/samples
        params: BnqnParams for the step
        strict: raise ProbeFailed when any assertion fails
        margin: slack on the repulsion factors

    Returns:
        LocalProbeReport
    """
    z_star = as_point(z_star)
    if classify_point(spec, z_star, params.tolerance) is not PointKind.CRITICAL:
        raise ProbeFailed([f"z*={z_star} is not a critical point of f"])
    model = local_model(spec, z_star)
    d = model.d
    r0 = r0 or default_radius(spec, z_star)
    # the next Taylor term perturbs the step at relative order r
    slack = margin + 10.0 * abs(model.a_next / model.ad) * r0
    sector_wide, sharp, half_width = repulsion_bounds(d)
    expected = model.hessian_scale(r0)

    direction = cmath.exp(1j * (model.stable_angle + math.pi / (2 * d)))
    outer = abs(_eigen_at(spec, z_star + r0 * direction)[0])
    inner = abs(_eigen_at(spec, z_star + 0.5 * r0 * direction)[0])
    d_estimate = 2.0 + math.log2(outer / inner)

    report = LocalProbeReport(model, r0, d_estimate)
    failures = report.failures
    if round(d_estimate) != d:
        failures.append(f"order estimate {d_estimate:.3f} disagrees with d={d}")

    for k in range(samples):
        u = r0 * cmath.exp(1j * (TWO_PI * (k + 0.5) / samples))
        z = z_star + u
        try:
            record = bnqn_step(z, spec, params)
        except BnqnError as err:
            failures.append(f"step failed at {z}: {err}")
            continue
        lam1, lam2 = _eigen_at(spec, z)
        cap_active = params.theta * math.hypot(*record.w) > 1.0
        ratio = abs(record.z_next - z_star) / r0
        offset = model.offset_from_unstable(u)
        report.samples.append(
            LocalSample(z, record.z_next, record.delta_index, record.gamma, cap_active, (lam1, lam2), ratio, offset)
        )
        if record.delta_index != 0:
            failures.append(f"delta_index={record.delta_index} at {z}")
        if record.gamma != params.gamma0:
            failures.append(f"gamma={record.gamma} at {z}")
        if cap_active:
            failures.append(f"theta cap active at {z}")
        if lam1 * lam2 >= 0 or max(abs(abs(lam1) / expected - 1), abs(abs(lam2) / expected - 1)) > 0.05:
            failures.append(f"eigenvalues {lam1:.6g}, {lam2:.6g} differ from +-{expected:.6g} at {z}")
        if offset < 0.5 * math.pi and ratio < sector_wide - slack:
            failures.append(f"repulsion {ratio:.6f} < {sector_wide:.6f} at {z}")
        if offset <= half_width and ratio < sharp - slack:
            failures.append(f"repulsion {ratio:.6f} < {sharp:.6f} at {z}")
        if offset >= 0.75 * math.pi and ratio >= 1.0:
            failures.append(f"no attraction ({ratio:.6f}) near a stable ray at {z}")

    if failures:
        logger.warning("local probe at %s: %d failed assertions", z_star, len(failures))
        if strict:
            raise ProbeFailed(failures, report)
    return report


@dataclass
class SectorSample:
    start: complex
    ray: object
    expected: ProbeClass
    outcome: ProbeClass
    steps: int

    def to_dict(self):
        return {
            "start": point_to_list(self.start),
            "ray": self.ray,
            "expected": self.expected.value if self.expected else None,
            "outcome": self.outcome.value,
            "steps": self.steps,
        }


def _real_data(spec):
    if isinstance(spec, RootsProduct):
        coeffs = spec.to_coeffs()
    else:
        coeffs = np.asarray(spec.coeffs)
    return not np.any(np.imag(coeffs))


def saddle_sector_probe(spec, z_star, r0=None, samples=36, params=BnqnParams(), max_iter=500):
    """Follow BNQN orbits started on a circle of radius r0/2 around z*.

    Starts off every ray must leave the disc of radius r0. Starts exactly on a
    stable ray along the real axis of a real polynomial stay on it and must
    converge to z*. Close to z* the change in F drops below the resolution
    of a double and the line search gives up; an orbit that stalls within
    STALL_DEPTH * r0 counts as converged. Other ray starts are
    recorded without expectation since rounding pushes them off their curve.

    Returns:
        list of SectorSample
    """
    z_star = as_point(z_star)
    model = local_model(spec, z_star)
    d = model.d
    r0 = r0 or default_radius(spec, z_star)
    real_axis = _real_data(spec) and z_star.imag == 0

    starts = []
    for j in range(2 * d):
        angle = model.stable_angle + math.pi * j / d
        u = 0.5 * r0 * cmath.exp(1j * angle)
        on_axis = abs(math.sin(angle)) < 1e-12
        if j % 2 == 1:
            expected = ProbeClass.LEFT_DISC
        elif real_axis and on_axis:
            expected = ProbeClass.CONVERGED
            u = complex(math.copysign(0.5 * r0, math.cos(angle)), 0.0)
        else:
            expected = None
        starts.append((u, j, expected))
    for k in range(samples):
        u = 0.5 * r0 * cmath.exp(1j * (model.stable_angle + TWO_PI * (k + 0.5) / samples))
        starts.append((u, None, ProbeClass.LEFT_DISC))

    results = []
    for u, ray, expected in starts:
        z = z_star + u
        outcome = ProbeClass.UNDECIDED
        steps = 0
        for steps in range(1, max_iter + 1):
            try:
                z = bnqn_step(z, spec, params).z_next
            except ArmijoFloor:
                # no decrease of F is resolvable any more
                if abs(z - z_star) <= STALL_DEPTH * r0:
                    outcome = ProbeClass.CONVERGED
                break
            except BnqnError as err:
                logger.debug("sector probe stopped at %s: %s", z, err)
                break
            gap = abs(z - z_star)
            if gap > r0:
                outcome = ProbeClass.LEFT_DISC
                break
            if gap <= 1e-10 * r0:
                outcome = ProbeClass.CONVERGED
                break
        results.append(SectorSample(z_star + u, ray, expected, outcome, steps))
    return results


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateEstimate:
    ratio: float
    superlinear: bool
    n_used: int

    def to_dict(self):
        return {"ratio": self.ratio, "superlinear": self.superlinear, "n_used": self.n_used}


def contraction_rate(points, limit, floor=1e-13, min_points=5):
    """Fit the geometric ratio of |z_n - limit| over the tail of an orbit.

    Returns ratio 0 with the superlinear flag when the errors collapse
    faster than any fixed ratio.

    Raises:
        InsufficientTail: fewer than min_points usable errors for a linear fit.
    """
    limit = as_point(limit)
    threshold = floor * (1.0 + abs(limit))
    errors = [abs(as_point(z) - limit) for z in points]
    usable = [e for e in errors if e > threshold]
    ratios = [b / a for a, b in zip(usable, usable[1:])]
    reached = bool(errors) and errors[-1] <= threshold
    if reached and (len(usable) < min_points or (ratios and ratios[-1] < 0.05)):
        return RateEstimate(0.0, True, len(usable))
    if len(ratios) >= 2 and ratios[-1] < 0.05 and ratios[-1] < ratios[-2]:
        return RateEstimate(0.0, True, len(usable))
    if len(usable) < min_points:
        raise InsufficientTail(f"{len(usable)} usable points, at least {min_points} needed")
    tail = usable[-max(min_points, len(usable) // 2) :]
    slope = np.polyfit(np.arange(len(tail)), np.log(tail), 1)[0]
    return RateEstimate(float(math.exp(slope)), False, len(tail))


def root_multiplicity(spec, z, eps=1e-6):
    """Order of vanishing of f at the root z."""
    z = as_point(z)
    if isinstance(spec, RootsProduct):
        return max(1, sum(1 for r in spec.roots if abs(r - z) <= eps))
    if isinstance(spec, POLYNOMIALS):
        coeffs = taylor_coefficients(spec, z, spec.degree)
        size = max(abs(c) for c in coeffs)
        for k, c in enumerate(coeffs[1:], start=1):
            if abs(c) > eps * size:
                return k
        return spec.degree
    if getattr(spec, "kind", None) == "rational":
        return root_multiplicity(spec.num, z, eps)
    return 1


def expected_rate(method, multiplicity, gamma=1.0):
    """Local linear ratio at a root of the given multiplicity, 0 for superlinear."""
    d = multiplicity
    if method in ("newton", "relaxed"):
        # z - gamma * z / d on f = z^d
        value = abs(1.0 - gamma / d)
        return value
    if d <= 1:
        return 0.0
    if method in ("bnqn", "newton_opt"):
        return (2 * d - 2) / (2 * d - 1)
    raise ValueError(f"no closed-form rate for {method!r}")


def m_value(alpha, d):
    """Real part of 2/3 + (d-1)/2 * u + (d-1)(d-2)/6 * u^2 with u = e^(i alpha)/(d-1).

    alpha may be a scalar or a numpy array.
    """
    return 2.0 / 3.0 + 0.5 * np.cos(alpha) + (d - 2) / (6.0 * (d - 1)) * np.cos(2.0 * alpha)


def m_bound_sweep(d_range=range(2, 21), alpha_steps=10_000):
    """Minimum of m_value over alpha in [-3pi/4, 5pi/4] and d in d_range."""
    alphas = np.linspace(-0.75 * math.pi, 1.25 * math.pi, alpha_steps)
    best = math.inf
    for d in d_range:
        if d < 2:
            raise ValueError(f"d must be >= 2, got {d}")
        low = float(m_value(alphas, d).min())
        if low < best:
            best = low
            logger.debug("M minimum %.6f at d=%d", low, d)
    return best
