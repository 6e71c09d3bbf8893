"""Backtracking New Q-Newton's method: one step, the run loop and its checks."""

import logging
import math
from dataclasses import dataclass, field, fields
from enum import Enum

from .errors import (
    ArmijoFloor,
    BnqnError,
    ConfigError,
    DuplicateDeltas,
    InternalInvariantViolation,
    Overflow,
    PoleAt,
)
from .funcs import (
    PointKind,
    PointTolerance,
    as_point,
    classify_jet,
    compose_linear,
    eval_jet,
    fvalue,
    grad_hess,
)
from .linalg2 import dot, eigen_sym2, norm, project_signed, solve

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BnqnParams:
    deltas: tuple = (0.0, 1.0, 2.0)
    tau: int = 2
    theta: float = 1.0
    gamma0: float = 1.0
    backoff: float = 1 / 3
    armijo_c: float = 1 / 3
    grad_tol: float = 1e-10
    root_tol: float = 1e-8
    crit_tol: float = 1e-8
    escape_radius: float = 1e6
    max_iter: int = 1000
    max_armijo: int = 200

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        if len(self.deltas) != 3:
            raise ConfigError("deltas", f"exactly 3 values required, got {len(self.deltas)}")
        if len(set(self.deltas)) != 3:
            raise ConfigError("deltas", f"values must be pairwise distinct, got {list(self.deltas)}")
        if isinstance(self.tau, bool) or int(self.tau) != self.tau or self.tau < 2 or self.tau % 2:
            raise ConfigError("tau", f"must be an even positive integer, got {self.tau}")
        object.__setattr__(self, "tau", int(self.tau))
        if self.theta < 0:
            raise ConfigError("theta", f"must be >= 0, got {self.theta}")
        if not 0 < self.gamma0 <= 1:
            raise ConfigError("gamma0", f"must lie in (0, 1], got {self.gamma0}")
        if not 0 < self.backoff < 1:
            raise ConfigError("backoff", f"must lie in (0, 1), got {self.backoff}")
        if not 0 < self.armijo_c < 1:
            raise ConfigError("armijo_c", f"must lie in (0, 1), got {self.armijo_c}")
        for name in ("grad_tol", "root_tol", "crit_tol", "escape_radius"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, f"must be > 0, got {getattr(self, name)}")
        for name in ("max_iter", "max_armijo"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(name, f"must be >= 1, got {getattr(self, name)}")

    @property
    def tolerance(self):
        return PointTolerance(self.root_tol, self.crit_tol)

    def replace(self, **changes):
        data = self.to_dict()
        data.update(changes)
        return BnqnParams(**data)

    @classmethod
    def from_dict(cls, data, where="params.bnqn"):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"{where}.{unknown[0]}", "unknown parameter")
        try:
            return cls(**data)
        except ConfigError as err:
            raise ConfigError(f"{where}.{err.field}", str(err).split(": ", 1)[1]) from err
        except (TypeError, ValueError) as err:
            raise ConfigError(where, str(err)) from err

    def to_dict(self):
        return {
            "deltas": list(self.deltas),
            "tau": self.tau,
            "theta": self.theta,
            "gamma0": self.gamma0,
            "backoff": self.backoff,
            "armijo_c": self.armijo_c,
            "grad_tol": self.grad_tol,
            "root_tol": self.root_tol,
            "crit_tol": self.crit_tol,
            "escape_radius": self.escape_radius,
            "max_iter": self.max_iter,
            "max_armijo": self.max_armijo,
        }


@dataclass(frozen=True)
class StepRecord:
    z: complex
    fval: float
    grad_norm: float
    delta_index: int
    gamma: float
    w: tuple
    w_hat: tuple
    armijo_trials: int
    z_next: complex
    slope: float
    minsp_a: float = field(default=0.0, compare=False)

    def to_row(self, step):
        return {
            "step": step,
            "re": self.z.real,
            "im": self.z.imag,
            "F": self.fval,
            "grad_norm": self.grad_norm,
            "delta_index": self.delta_index,
            "gamma": self.gamma,
            "armijo_trials": self.armijo_trials,
        }


class OutcomeKind(Enum):
    ROOT = "ConvergedToRoot"
    CRITICAL = "ConvergedToCritical"
    DIVERGED = "Diverged"
    POLE = "PoleHit"
    MAX_ITER = "MaxIterReached"


@dataclass(frozen=True)
class RunOutcome:
    kind: OutcomeKind
    z: complex
    iters: int

    def to_dict(self):
        return {"kind": self.kind.value, "z": [self.z.real, self.z.imag], "iters": self.iters}


def kappa(deltas):
    """Half the smallest gap between two deltas."""
    deltas = list(deltas)
    if len(set(deltas)) != len(deltas):
        raise DuplicateDeltas(deltas)
    return 0.5 * min(abs(a - b) for i, a in enumerate(deltas) for b in deltas[i + 1 :])


def select_delta(H, g, params):
    """Pick the first delta whose shift keeps H away from singular.

    Args:
        H: the Hessian of F
        g: ||grad F||^tau, positive
        params: BnqnParams

    Returns:
        (j, A, eig) with A = H + deltas[j] * g * Id and its eigen decomposition.
    """
    k = kappa(params.deltas)
    for j, delta in enumerate(params.deltas):
        A = H.shifted(delta * g)
        eig = eigen_sym2(A)
        if abs(eig.lam2) >= k * g and eig.lam2 != 0.0:
            return j, A, eig
    raise InternalInvariantViolation(f"no delta in {params.deltas} regularises {H.to_list()} at g={g}")


def _regularised_direction(gh, params):
    grad = gh.grad
    g = norm(grad) ** params.tau
    j, A, eig = select_delta(gh.hess, g, params)
    v = solve(A, grad, eig)
    vplus, vminus = project_signed(A, v, eig)
    w = (vplus[0] - vminus[0], vplus[1] - vminus[1])
    cap = max(1.0, params.theta * norm(w))
    return (w[0] / cap, w[1] / cap), j, w, abs(eig.lam2)


def bnqn_direction(gh, params):
    """Return (w_hat, delta_index, w) for the current gradient and Hessian."""
    w_hat, j, w, _ = _regularised_direction(gh, params)
    return w_hat, j, w


def armijo_search(z, w_hat, gh, params, evaluator):
    """Backtrack from gamma0 until the Armijo condition holds.

    A trial point that lands on a pole or overflows counts as rejected.

    Returns:
        (gamma, trials), trials counting every evaluation of F.

    Raises:
        ArmijoFloor: after max_armijo rejected trials.
    """
    slope = dot(w_hat, gh.grad)
    for k in range(params.max_armijo):
        gamma = params.gamma0 * params.backoff**k
        trial = complex(z.real - gamma * w_hat[0], z.imag - gamma * w_hat[1])
        try:
            decrease = evaluator(trial) - gh.fval
        except (PoleAt, Overflow):
            continue
        if decrease <= -params.armijo_c * gamma * slope:
            return gamma, k + 1
    raise ArmijoFloor(z, params.max_armijo)


def bnqn_step(z, spec, params, jet=None):
    """One BNQN update from z.

    The caller guarantees that the gradient of F does not vanish at z.
    """
    z = as_point(z)
    jet = jet or eval_jet(spec, z)
    gh = grad_hess(jet)
    grad_norm = norm(gh.grad)
    if grad_norm == 0.0:
        raise InternalInvariantViolation(f"gradient vanishes at z={z}; nothing to step")
    w_hat, j, w, min_eig = _regularised_direction(gh, params)
    gamma, trials = armijo_search(z, w_hat, gh, params, lambda p: fvalue(spec, p))
    z_next = complex(z.real - gamma * w_hat[0], z.imag - gamma * w_hat[1])
    logger.debug("step z=%s j=%d gamma=%g trials=%d", z, j, gamma, trials)
    return StepRecord(
        z=z,
        fval=gh.fval,
        grad_norm=grad_norm,
        delta_index=j,
        gamma=gamma,
        w=w,
        w_hat=w_hat,
        armijo_trials=trials,
        z_next=z_next,
        slope=dot(w_hat, gh.grad),
        minsp_a=min_eig,
    )


def outcome_for(kind, z, iters):
    """Outcome for a run that settled at a point of the given kind, or None."""
    if kind is PointKind.ROOT:
        return RunOutcome(OutcomeKind.ROOT, z, iters)
    if kind is PointKind.CRITICAL:
        return RunOutcome(OutcomeKind.CRITICAL, z, iters)
    return None


def run(z0, spec, params=BnqnParams()):
    """Iterate BNQN from z0 until it settles, escapes or hits a pole.

    Numerical failures never escape: they become outcomes.

    Returns:
        (trace, outcome), one StepRecord per step taken.
    """
    z = as_point(z0)
    tol = params.tolerance
    trace = []
    for n in range(params.max_iter):
        if abs(z) > params.escape_radius:
            return trace, RunOutcome(OutcomeKind.DIVERGED, z, n)
        try:
            jet = eval_jet(spec, z)
        except PoleAt:
            logger.debug("pole hit at %s after %d steps", z, n)
            return trace, RunOutcome(OutcomeKind.POLE, z, n)
        except Overflow:
            return trace, RunOutcome(OutcomeKind.DIVERGED, z, n)
        kind = classify_jet(jet, tol)
        grad = abs(jet.f * jet.df.conjugate())
        if grad <= params.grad_tol:
            outcome = outcome_for(kind, z, n)
            if outcome:
                return trace, outcome
        try:
            record = bnqn_step(z, spec, params, jet)
        except (ArmijoFloor, InternalInvariantViolation) as err:
            logger.debug("run stalled at %s: %s", z, err)
            return trace, outcome_for(kind, z, n) or RunOutcome(OutcomeKind.MAX_ITER, z, n)
        trace.append(record)
        z = record.z_next
    logger.debug("max_iter reached at %s", z)
    try:
        jet = eval_jet(spec, z)
    except BnqnError:
        return trace, RunOutcome(OutcomeKind.MAX_ITER, z, params.max_iter)
    if abs(jet.f * jet.df.conjugate()) <= params.grad_tol:
        stopped = outcome_for(classify_jet(jet, tol), z, params.max_iter)
        if stopped:
            return trace, stopped
    return trace, RunOutcome(OutcomeKind.MAX_ITER, z, params.max_iter)


def trace_points(trace, outcome):
    """Iterates z_0 .. z_n including the final point."""
    return [r.z for r in trace] + [outcome.z]


# ---------------------------------------------------------------------------
# invariance and descent checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConjugacyReport:
    c: float
    angle: float
    params: BnqnParams
    conjugated_params: BnqnParams
    max_deviation: float
    steps_compared: int
    tolerance: float

    @property
    def passed(self):
        return self.max_deviation <= self.tolerance

    def to_dict(self):
        return {
            "c": self.c,
            "angle": self.angle,
            "params": self.params.to_dict(),
            "conjugated_params": self.conjugated_params.to_dict(),
            "max_deviation": self.max_deviation,
            "steps_compared": self.steps_compared,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def conjugated_params(params, c):
    """Parameters under which BNQN on F(c*R*z) mirrors BNQN on F."""
    scale = c ** (2 - params.tau)
    return params.replace(deltas=[d * scale for d in params.deltas], theta=params.theta * c)


def conjugacy_check(spec, params, z0s, c, angle, steps=50, tolerance=1e-9):
    """Run BNQN on f and on g(z) = f(alpha z) side by side.

    With alpha = c * exp(i * angle), the iterates of g must be those of f
    divided by alpha. Deviation is |z'_n - z_n / alpha| / (1 + |z_n|).
    """
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    alpha = c * complex(math.cos(angle), math.sin(angle))
    g_spec = compose_linear(spec, alpha)
    g_params = conjugated_params(params, c)
    worst = 0.0
    compared = 0
    for z0 in z0s:
        z = as_point(z0)
        zp = z / alpha
        for _ in range(steps):
            worst = max(worst, abs(zp - z / alpha) / (1.0 + abs(z)))
            compared += 1
            try:
                jet, jet_g = eval_jet(spec, z), eval_jet(g_spec, zp)
            except BnqnError:
                break
            if jet.f * jet.df == 0 or jet_g.f * jet_g.df == 0:
                break
            try:
                z_next = bnqn_step(z, spec, params, jet).z_next
                zp_next = bnqn_step(zp, g_spec, g_params, jet_g).z_next
            except BnqnError as err:
                logger.debug("conjugacy comparison stopped at %s: %s", z, err)
                break
            z, zp = z_next, zp_next
        worst = max(worst, abs(zp - z / alpha) / (1.0 + abs(z)))
    report = ConjugacyReport(float(c), float(angle), params, g_params, worst, compared, tolerance)
    if not report.passed:
        logger.warning("conjugacy deviation %g exceeds %g", worst, tolerance)
    return report


def descent_floor(spec, params, points):
    """Smallest one-step decrease F(z) - F(z_next) over the sample.

    Points with a vanishing gradient, or that classify as roots or critical
    points, are skipped.
    """
    floor = math.inf
    for z in points:
        try:
            jet = eval_jet(spec, z)
        except BnqnError:
            continue
        if classify_jet(jet, params.tolerance) is not PointKind.REGULAR:
            continue
        record = bnqn_step(z, spec, params, jet)
        floor = min(floor, record.fval - fvalue(spec, record.z_next))
    return floor
