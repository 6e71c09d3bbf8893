import math

import numpy as np
import pytest

from bnqn.errors import SingularMatrix
from bnqn.linalg2 import Sym2, dot, eigen_sym2, minsp, norm, project_signed, solve, sp


@pytest.mark.parametrize("matrix", [
  Sym2(2.0, 0.0, -3.0),
  Sym2(2.0, 1.0, 1.0),
  Sym2(-4.0, 3.0, 0.5),
  Sym2(1e-8, 2e-9, -3e-8),
  Sym2(1e6, -2e5, 7e5),
])
def test_eigenvectors_are_orthonormal_and_satisfy_the_eigen_equation(matrix):
  eig = eigen_sym2(matrix)

  assert abs(eig.lam1) >= abs(eig.lam2)
  assert norm(eig.e1) == pytest.approx(1.0)
  assert norm(eig.e2) == pytest.approx(1.0)
  assert dot(eig.e1, eig.e2) == pytest.approx(0.0, abs=1e-12)
  scale = max(abs(eig.lam1), 1e-300)
  for lam, e in ((eig.lam1, eig.e1), (eig.lam2, eig.e2)):
    image = matrix.apply(e)
    assert image[0] == pytest.approx(lam * e[0], abs=1e-12 * scale)
    assert image[1] == pytest.approx(lam * e[1], abs=1e-12 * scale)


def test_diagonal_matrix_orders_eigenvalues_by_magnitude():
  eig = eigen_sym2(Sym2(2.0, 0.0, -3.0))

  assert eig.lam1 == -3.0
  assert eig.lam2 == 2.0


def test_multiple_of_identity_uses_coordinate_axes():
  eig = eigen_sym2(Sym2(5.0, 0.0, 5.0))

  assert eig.lam1 == eig.lam2 == 5.0
  assert eig.e1 == (1.0, 0.0)
  assert eig.e2 == (0.0, -1.0)


def test_spectral_radius_and_smallest_absolute_eigenvalue():
  matrix = Sym2(1.0, 2.0, 1.0)  # eigenvalues 3 and -1

  assert sp(matrix) == pytest.approx(3.0)
  assert minsp(matrix) == pytest.approx(1.0)


def test_signed_projection_splits_along_eigenspaces():
  plus, minus = project_signed(Sym2(1.0, 0.0, -1.0), (3.0, 4.0))

  assert plus == pytest.approx((3.0, 0.0))
  assert minus == pytest.approx((0.0, 4.0))


def test_signed_projection_parts_sum_back_to_the_vector():
  v = (0.3, -1.7)
  plus, minus = project_signed(Sym2(2.0, 1.5, -1.0), v)

  assert plus[0] + minus[0] == pytest.approx(v[0])
  assert plus[1] + minus[1] == pytest.approx(v[1])
  assert dot(plus, minus) == pytest.approx(0.0, abs=1e-12)


def test_solve_inverts_the_matrix():
  # [[2, 1], [1, 1]]^-1 = [[1, -1], [-1, 2]]
  assert solve(Sym2(2.0, 1.0, 1.0), (1.0, 0.0)) == pytest.approx((1.0, -1.0))


@pytest.mark.parametrize("operation", [project_signed, solve])
def test_singular_matrix_is_refused(operation):
  with pytest.raises(SingularMatrix):
    operation(Sym2(1.0, 1.0, 1.0), (1.0, 2.0))


def test_shifted_adds_to_the_diagonal_only():
  assert Sym2(1.0, 2.0, 3.0).shifted(0.5) == Sym2(1.5, 2.0, 3.5)


def test_discriminant_never_goes_negative_for_nearly_equal_diagonals():
  eig = eigen_sym2(Sym2(1.0, 1e-9, 1.0 + 1e-15))

  assert not math.isnan(eig.lam1)
  assert eig.lam1 - eig.lam2 == pytest.approx(2e-9, rel=1e-3)


def _random_cases(count, seed=5):
  rng = np.random.default_rng(seed)
  cases = []
  while len(cases) < count:
    a11, a12, a22, x, y = rng.uniform(-1.0, 1.0, size=5)
    matrix = Sym2(a11, a12, a22)
    if minsp(matrix) >= 1e-6:
      cases.append((matrix, (x, y)))
  return cases


def test_signed_projection_on_random_matrices():
  for matrix, v in _random_cases(1000):
    plus, minus = project_signed(matrix, v)

    assert plus[0] + minus[0] == pytest.approx(v[0], abs=1e-12 * norm(v))
    assert plus[1] + minus[1] == pytest.approx(v[1], abs=1e-12 * norm(v))
    assert abs(dot(plus, minus)) <= 1e-12 * dot(v, v)


def test_spectral_radius_is_the_largest_stretch_over_directions():
  angles = [math.pi * k / 180 for k in range(360)]
  for matrix, _ in _random_cases(1000):
    stretch = max(norm(matrix.apply((math.cos(t), math.sin(t)))) for t in angles)

    # 1 degree sampling sees at least cos(half a step) of the peak
    assert stretch <= sp(matrix) * (1 + 1e-12)
    assert stretch >= sp(matrix) * math.cos(math.pi / 360)
