"""Errors raised by the bnqn package.

Every numerical failure has its own class so callers can catch exactly
what they expect and let everything else surface.
"""


class BnqnError(Exception):
    pass


class PoleAt(BnqnError):
    def __init__(self, z):
        self.z = z
        super().__init__(f"pole encountered at z={z}")


class Overflow(BnqnError):
    def __init__(self, z, magnitude=None):
        self.z = z
        self.magnitude = magnitude
        super().__init__(f"magnitude {magnitude} exceeds the overflow cap at z={z}")


class SingularMatrix(BnqnError):
    pass


class SingularHessian(SingularMatrix):
    pass


class DuplicateDeltas(BnqnError):
    def __init__(self, deltas):
        self.deltas = tuple(deltas)
        super().__init__(f"deltas must be pairwise distinct, got {self.deltas}")


class ArmijoFloor(BnqnError):
    def __init__(self, z, trials):
        self.z = z
        self.trials = trials
        super().__init__(f"Armijo backtracking gave up after {trials} trials at z={z}")


class InternalInvariantViolation(BnqnError):
    pass


class CriticalPointHit(BnqnError):
    def __init__(self, z):
        self.z = z
        super().__init__(f"derivative vanishes at z={z}")


class StepNearSingularity(BnqnError):
    def __init__(self, z, t):
        self.z = z
        self.t = t
        super().__init__(f"flow field is singular near z={z} at t={t}")


class OriginUndefined(BnqnError):
    pass


class InsufficientTail(BnqnError):
    pass


class EmptySites(BnqnError):
    pass


class PaletteTooSmall(BnqnError):
    def __init__(self, needed, available):
        self.needed = needed
        self.available = available
        super().__init__(f"palette has {available} colours, {needed} needed")


class ProbeFailed(BnqnError):
    """A numerical probe found a violated assertion.

    The full report travels with the error so it can still be written out.
    """

    def __init__(self, failures, report=None):
        self.failures = list(failures)
        self.report = report
        super().__init__("; ".join(self.failures) or "probe failed")


class ConfigError(BnqnError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
