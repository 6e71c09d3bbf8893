"""Closed-form eigen machinery for 2x2 symmetric matrices.

Vectors are plain ``(x, y)`` tuples of floats.
"""

import math
from dataclasses import dataclass

from .errors import SingularMatrix

# relative size below which the two eigenvalues are treated as equal
COINCIDENCE_EPS = 1e-14


@dataclass(frozen=True)
class Sym2:
    """The symmetric matrix [[a11, a12], [a12, a22]]."""

    a11: float
    a12: float
    a22: float

    def shifted(self, s):
        """Return self + s * Id."""
        return Sym2(self.a11 + s, self.a12, self.a22 + s)

    def apply(self, v):
        x, y = v
        return (self.a11 * x + self.a12 * y, self.a12 * x + self.a22 * y)

    def to_list(self):
        return [[self.a11, self.a12], [self.a12, self.a22]]


@dataclass(frozen=True)
class EigenPair2:
    lam1: float
    lam2: float
    e1: tuple
    e2: tuple


def dot(u, v):
    return u[0] * v[0] + u[1] * v[1]


def norm(v):
    return math.hypot(v[0], v[1])


def _null_direction(A, lam):
    row1 = (A.a11 - lam, A.a12)
    row2 = (A.a12, A.a22 - lam)
    p, q = row1 if norm(row1) >= norm(row2) else row2
    length = math.hypot(p, q)
    x, y = -q / length, p / length
    # largest component positive, so results do not depend on row choice
    if (abs(x) >= abs(y) and x < 0) or (abs(y) > abs(x) and y < 0):
        x, y = -x, -y
    return (x + 0.0, y + 0.0)


def eigen_sym2(A):
    """Eigen-decompose a symmetric 2x2 matrix in closed form.

    The discriminant t^2 - 4*det is evaluated as (a11 - a22)^2 + 4*a12^2,
    the same quantity written so it cannot go negative by rounding.

    Args:
        A: the Sym2 to decompose

    Returns:
        EigenPair2 with |lam1| >= |lam2| and orthonormal e1, e2.
    """
    t = A.a11 + A.a22
    half_root = 0.5 * math.hypot(A.a11 - A.a22, 2.0 * A.a12)
    lam_plus = 0.5 * t + half_root
    lam_minus = 0.5 * t - half_root
    if abs(lam_minus) > abs(lam_plus):
        lam1, lam2 = lam_minus, lam_plus
    else:
        lam1, lam2 = lam_plus, lam_minus

    scale = max(abs(A.a11), abs(A.a12), abs(A.a22))
    if half_root <= COINCIDENCE_EPS * scale or scale == 0.0:
        # any orthonormal pair spans the single eigenspace
        e1 = (1.0, 0.0) if abs(A.a11 - lam1) <= abs(A.a22 - lam1) else (0.0, 1.0)
    else:
        e1 = _null_direction(A, lam1)
    e2 = (e1[1] + 0.0, -e1[0] + 0.0)
    return EigenPair2(lam1, lam2, e1, e2)


def sp(A):
    """Spectral radius: the largest |eigenvalue|."""
    eig = eigen_sym2(A)
    return abs(eig.lam1)


def minsp(A):
    """Smallest |eigenvalue|; zero exactly when A is singular."""
    eig = eigen_sym2(A)
    return abs(eig.lam2)


def project_signed(A, v, eig=None):
    """Split v into its parts along the positive and negative eigenspaces of A.

    Args:
        A: an invertible Sym2
        v: the vector to split
        eig: a precomputed eigen_sym2(A), if the caller already has one

    Returns:
        (vplus, vminus) with vplus + vminus == v up to rounding.

    Raises:
        SingularMatrix: if A has a zero eigenvalue.
    """
    eig = eig or eigen_sym2(A)
    if eig.lam2 == 0.0:
        raise SingularMatrix(f"matrix {A.to_list()} is singular")
    plus = [0.0, 0.0]
    minus = [0.0, 0.0]
    for lam, e in ((eig.lam1, eig.e1), (eig.lam2, eig.e2)):
        c = dot(v, e)
        target = plus if lam > 0 else minus
        target[0] += c * e[0]
        target[1] += c * e[1]
    return tuple(plus), tuple(minus)


def solve(A, b, eig=None):
    """Return A^{-1} b through the eigen decomposition."""
    eig = eig or eigen_sym2(A)
    if eig.lam2 == 0.0:
        raise SingularMatrix(f"matrix {A.to_list()} is singular")
    c1 = dot(b, eig.e1) / eig.lam1
    c2 = dot(b, eig.e2) / eig.lam2
    return (c1 * eig.e1[0] + c2 * eig.e2[0], c1 * eig.e1[1] + c2 * eig.e2[1])
