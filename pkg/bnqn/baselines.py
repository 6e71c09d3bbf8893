"""Comparison methods: Newton and its relaxations, Newton for optimization, Newton's flow.

Every method can be driven through run_method, which stops on the same rule
as the BNQN run loop so basin images of different methods are comparable.
"""

import cmath
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .core import BnqnParams, OutcomeKind, RunOutcome, outcome_for, run, trace_points
from .errors import (
    BnqnError,
    ConfigError,
    CriticalPointHit,
    Overflow,
    PoleAt,
    SingularHessian,
    SingularMatrix,
    StepNearSingularity,
)
from .funcs import as_point, classify_jet, eval_jet, grad_hess
from .linalg2 import eigen_sym2, solve

logger = logging.getLogger(__name__)

METHODS = ("bnqn", "newton", "relaxed", "random_relaxed", "newton_opt", "flow")

# |f'| below this multiple of (1 + |f|) makes the Newton quotient meaningless
NEWTON_EPS = 1e-14


def _point_field(data, key, where, default):
    value = data.get(key, default)
    try:
        return as_point(value)
    except (TypeError, ValueError, IndexError) as err:
        raise ConfigError(f"{where}.{key}", str(err)) from err


@dataclass(frozen=True)
class RelaxedParams:
    gamma: complex = 0.5 + 0j

    def __post_init__(self):
        object.__setattr__(self, "gamma", as_point(self.gamma))
        if self.gamma == 0:
            raise ConfigError("gamma", "relaxation factor must be nonzero")

    @classmethod
    def from_dict(cls, data, where="params.relaxed"):
        return cls(_point_field(data, "gamma", where, [0.5, 0.0]))

    def to_dict(self):
        return {"gamma": [self.gamma.real, self.gamma.imag]}


@dataclass(frozen=True)
class RandomRelaxedParams:
    seed: int = 0
    radius: float = 0.5

    def __post_init__(self):
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", f"must be a 64-bit unsigned integer, got {self.seed}")
        if not 0 < self.radius < 1:
            raise ConfigError("radius", f"must lie in (0, 1), got {self.radius}")

    @classmethod
    def from_dict(cls, data, where="params.random_relaxed"):
        try:
            return cls(int(data.get("seed", 0)), float(data.get("radius", 0.5)))
        except ConfigError as err:
            raise ConfigError(f"{where}.{err.field}", str(err).split(": ", 1)[1]) from err
        except (TypeError, ValueError) as err:
            raise ConfigError(where, str(err)) from err

    def to_dict(self):
        return {"seed": self.seed, "radius": self.radius}


@dataclass(frozen=True)
class RandomRelaxedState:
    """Where a Random Relaxed Newton trace stands in its random stream.

    stream separates independent traces (one per pixel) under one seed.
    """

    seed: int
    stream: int = 0
    step: int = 0

    def draw(self, radius):
        rng = np.random.default_rng([self.seed, self.stream, self.step])
        rho = radius * math.sqrt(rng.random())
        phi = 2.0 * math.pi * rng.random()
        return 1.0 + rho * cmath.exp(1j * phi)

    def advance(self):
        return replace(self, step=self.step + 1)


class FlowMode(Enum):
    RAW = "raw"
    DESINGULARIZED = "desingularized"


@dataclass(frozen=True)
class FlowParams:
    dt: float = 1e-2
    t_max: float = 25.0
    mode: FlowMode = FlowMode.RAW

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt", f"must be > 0, got {self.dt}")
        if not self.dt <= self.t_max:
            raise ConfigError("t_max", f"must be >= dt, got {self.t_max}")
        if not isinstance(self.mode, FlowMode):
            try:
                object.__setattr__(self, "mode", FlowMode(self.mode))
            except ValueError as err:
                raise ConfigError("mode", f"expected 'raw' or 'desingularized', got {self.mode!r}") from err

    @classmethod
    def from_dict(cls, data, where="params.flow"):
        try:
            return cls(float(data.get("dt", 1e-2)), float(data.get("t_max", 25.0)), data.get("mode", "raw"))
        except ConfigError as err:
            raise ConfigError(f"{where}.{err.field}", str(err).split(": ", 1)[1]) from err
        except (TypeError, ValueError) as err:
            raise ConfigError(where, str(err)) from err

    def to_dict(self):
        return {"dt": self.dt, "t_max": self.t_max, "mode": self.mode.value}


@dataclass(frozen=True)
class MethodParams:
    """Parameters of every method; BNQN's tolerances double as the shared stopping rule."""

    bnqn: BnqnParams = BnqnParams()
    relaxed: RelaxedParams = RelaxedParams()
    random_relaxed: RandomRelaxedParams = RandomRelaxedParams()
    flow: FlowParams = FlowParams()

    @classmethod
    def from_dict(cls, data, where="params"):
        if not isinstance(data, dict):
            raise ConfigError(where, "expected an object")
        unknown = sorted(set(data) - {"bnqn", "relaxed", "random_relaxed", "flow"})
        if unknown:
            raise ConfigError(f"{where}.{unknown[0]}", "unknown parameter section")
        return cls(
            BnqnParams.from_dict(data.get("bnqn", {}), f"{where}.bnqn"),
            RelaxedParams.from_dict(data.get("relaxed", {}), f"{where}.relaxed"),
            RandomRelaxedParams.from_dict(data.get("random_relaxed", {}), f"{where}.random_relaxed"),
            FlowParams.from_dict(data.get("flow", {}), f"{where}.flow"),
        )

    def to_dict(self):
        return {
            "bnqn": self.bnqn.to_dict(),
            "relaxed": self.relaxed.to_dict(),
            "random_relaxed": self.random_relaxed.to_dict(),
            "flow": self.flow.to_dict(),
        }


# ---------------------------------------------------------------------------
# steps
# ---------------------------------------------------------------------------


def _newton_quotient(spec, z, jet=None):
    jet = jet or eval_jet(spec, z)
    if abs(jet.df) <= NEWTON_EPS * (1.0 + abs(jet.f)):
        raise CriticalPointHit(z)
    return jet.f / jet.df


def newton_step(spec, z, jet=None):
    """z - f(z)/f'(z)."""
    z = as_point(z)
    return z - _newton_quotient(spec, z, jet)


def relaxed_step(spec, z, gamma, jet=None):
    z = as_point(z)
    return z - gamma * _newton_quotient(spec, z, jet)


def random_relaxed_step(spec, z, state, params, jet=None):
    """Relaxed step with gamma drawn from the state's stream.

    Returns:
        (z_next, next_state)
    """
    gamma = state.draw(params.radius)
    return relaxed_step(spec, z, gamma, jet), state.advance()


def newton_opt_step(spec, z, jet=None):
    """Newton's method applied to F: z - (Hess F)^-1 grad F."""
    z = as_point(z)
    gh = grad_hess(jet or eval_jet(spec, z))
    eig = eigen_sym2(gh.hess)
    if abs(eig.lam2) <= NEWTON_EPS * abs(eig.lam1):
        raise SingularHessian(f"Hessian {gh.hess.to_list()} is singular at z={z}")
    try:
        v = solve(gh.hess, gh.grad, eig)
    except SingularMatrix as err:
        raise SingularHessian(str(err)) from err
    return complex(z.real - v[0], z.imag - v[1])


def _raw_field(spec, z, t):
    jet = eval_jet(spec, z)
    if abs(jet.df) <= NEWTON_EPS * (1.0 + abs(jet.f)):
        raise StepNearSingularity(z, t)
    return -jet.f / jet.df


def _desingularized_field(spec, z, t):
    jet = eval_jet(spec, z)
    size = abs(jet.f) ** 2
    return -jet.f * jet.df.conjugate() * size / (1.0 + size * size)


def newton_flow(spec, z0, params=FlowParams()):
    """Integrate Newton's flow with fixed-step classical Runge-Kutta.

    Returns:
        [(t, z), ...] starting at (0, z0); stops early when the field vanishes.
    """
    field = _raw_field if params.mode is FlowMode.RAW else _desingularized_field
    z = as_point(z0)
    dt = params.dt
    steps = int(round(params.t_max / dt))
    trajectory = [(0.0, z)]
    for n in range(steps):
        t = n * dt
        k1 = field(spec, z, t)
        if k1 == 0:
            break
        k2 = field(spec, z + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = field(spec, z + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = field(spec, z + dt * k3, t + dt)
        z = z + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        trajectory.append(((n + 1) * dt, z))
    return trajectory


# ---------------------------------------------------------------------------
# uniform run loop
# ---------------------------------------------------------------------------


def _iterate(step, z, spec, stop):
    points = [z]
    tol = stop.tolerance
    for n in range(stop.max_iter):
        if abs(z) > stop.escape_radius:
            return points, RunOutcome(OutcomeKind.DIVERGED, z, n)
        try:
            jet = eval_jet(spec, z)
        except PoleAt:
            return points, RunOutcome(OutcomeKind.POLE, z, n)
        except Overflow:
            return points, RunOutcome(OutcomeKind.DIVERGED, z, n)
        kind = classify_jet(jet, tol)
        if abs(jet.f * jet.df) <= stop.grad_tol:
            settled = outcome_for(kind, z, n)
            if settled:
                return points, settled
        try:
            z = step(z, jet)
        except (CriticalPointHit, SingularHessian) as err:
            logger.debug("step undefined at %s: %s", z, err)
            return points, outcome_for(kind, z, n) or RunOutcome(OutcomeKind.MAX_ITER, z, n)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            return points, RunOutcome(OutcomeKind.DIVERGED, points[-1], n + 1)
        points.append(z)
    try:
        jet = eval_jet(spec, z)
    except BnqnError:
        return points, RunOutcome(OutcomeKind.MAX_ITER, z, stop.max_iter)
    settled = outcome_for(classify_jet(jet, tol), z, stop.max_iter)
    if settled and abs(jet.f * jet.df) <= stop.grad_tol:
        return points, settled
    return points, RunOutcome(OutcomeKind.MAX_ITER, z, stop.max_iter)


def _flow_run(spec, z0, params, stop):
    try:
        trajectory = newton_flow(spec, z0, params)
    except StepNearSingularity as err:
        logger.debug("flow stopped near a singularity at %s", err.z)
        try:
            kind = classify_jet(eval_jet(spec, err.z), stop.tolerance)
        except BnqnError:
            kind = None
        return [z0, err.z], outcome_for(kind, err.z, 0) or RunOutcome(OutcomeKind.MAX_ITER, err.z, 0)
    except (PoleAt, Overflow) as err:
        return [z0, err.z], RunOutcome(OutcomeKind.DIVERGED, err.z, 0)
    points = [z for _, z in trajectory]
    end = points[-1]
    if abs(end) > stop.escape_radius:
        return points, RunOutcome(OutcomeKind.DIVERGED, end, len(points) - 1)
    try:
        kind = classify_jet(eval_jet(spec, end), stop.tolerance)
    except BnqnError:
        return points, RunOutcome(OutcomeKind.DIVERGED, end, len(points) - 1)
    settled = outcome_for(kind, end, len(points) - 1)
    return points, settled or RunOutcome(OutcomeKind.MAX_ITER, end, len(points) - 1)


def run_method(method, z0, spec, methods=MethodParams(), stream=0):
    """Run one method from z0.

    Args:
        method: one of METHODS
        z0: starting point
        spec: the FunctionSpec
        methods: MethodParams; methods.bnqn also supplies the stopping rule
        stream: index of this trace in the Random Relaxed stream

    Returns:
        (points, outcome) with points the iterates from z0 onward.
    """
    z0 = as_point(z0)
    stop = methods.bnqn
    if method == "bnqn":
        trace, outcome = run(z0, spec, stop)
        return trace_points(trace, outcome), outcome
    if method == "newton":
        return _iterate(lambda z, jet: newton_step(spec, z, jet), z0, spec, stop)
    if method == "relaxed":
        gamma = methods.relaxed.gamma
        return _iterate(lambda z, jet: relaxed_step(spec, z, gamma, jet), z0, spec, stop)
    if method == "random_relaxed":
        state = [RandomRelaxedState(methods.random_relaxed.seed, stream)]

        def step(z, jet):
            z_next, state[0] = random_relaxed_step(spec, z, state[0], methods.random_relaxed, jet)
            return z_next

        return _iterate(step, z0, spec, stop)
    if method == "newton_opt":
        return _iterate(lambda z, jet: newton_opt_step(spec, z, jet), z0, spec, stop)
    if method == "flow":
        return _flow_run(spec, z0, methods.flow, stop)
    raise ConfigError("method", f"unknown method {method!r}, expected one of {', '.join(METHODS)}")
