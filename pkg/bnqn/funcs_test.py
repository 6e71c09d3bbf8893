import cmath
import math

import numpy as np
import pytest

from bnqn.errors import ConfigError, Overflow, PoleAt
from bnqn.funcs import (
  Coeffs,
  ExpAffine,
  NewtonQuotient,
  PointKind,
  Rational,
  RootsProduct,
  as_point,
  classify_point,
  compose_linear,
  conjugate_spec,
  critical_points,
  eval_f,
  eval_jet,
  fvalue,
  grad_F,
  grad_hess,
  hess_F,
  is_real_spec,
  local_order,
  spec_from_dict,
  spec_roots,
  taylor_coefficients,
)
from bnqn.linalg2 import eigen_sym2

P = np.polynomial.polynomial

QUARTIC = Coeffs((1, 0, 0, 0, -1))
MIXED = RootsProduct((-2, 5, 1 + 4j, 0))

SPECS = [
  QUARTIC,
  MIXED,
  Rational(Coeffs((1, 2)), RootsProduct((3j, -4))),
  NewtonQuotient(RootsProduct((0, 2j, 5 + 2j, 3 - 3j, 2 + 1j))),
  ExpAffine(2j, -1),
]


def _numpy_jet(coeffs, z):
  return [P.polyval(z, P.polyder(coeffs, k)) for k in range(3)]


@pytest.mark.parametrize("spec", [QUARTIC, MIXED, RootsProduct((1, 1, -2), leading=3 - 1j)])
@pytest.mark.parametrize("z", [0.3 + 0.7j, -1.5 + 0.2j, 4 - 3j])
def test_polynomial_jets_match_numpy(spec, z):
  expected = _numpy_jet(spec.to_coeffs(), z)

  jet = eval_jet(spec, z)

  assert jet.f == pytest.approx(expected[0], rel=1e-12)
  assert jet.df == pytest.approx(expected[1], rel=1e-12)
  assert jet.d2f == pytest.approx(expected[2], rel=1e-12)


def test_roots_product_jet_on_top_of_a_double_root():
  # (z - 1)^2 (z + 2): f = f' = 0 and f'' = 2 * 3 at z = 1
  jet = eval_jet(RootsProduct((1, 1, -2)), 1)

  assert jet.f == 0
  assert jet.df == 0
  assert jet.d2f == pytest.approx(6)


def test_rational_jet_matches_quotient_rule():
  spec = Rational(Coeffs((1, 2)), Coeffs((0, 0, 1)))  # (1 + 2z) / z^2
  z = 0.5 + 1j

  jet = eval_jet(spec, z)

  assert jet.f == pytest.approx((1 + 2 * z) / z**2)
  assert jet.df == pytest.approx(-2 / z**2 - 2 / z**3)
  assert jet.d2f == pytest.approx(4 / z**3 + 6 / z**4)


def test_newton_quotient_is_p_over_its_derivative():
  p = RootsProduct((1, -1, 2j))
  spec = NewtonQuotient(p)
  z = 0.4 - 0.9j
  dp = eval_jet(p, z).df

  assert eval_f(spec, z) == pytest.approx(eval_f(p, z) / dp)


def test_rational_raises_at_a_pole():
  with pytest.raises(PoleAt):
    eval_jet(Rational(Coeffs((1,)), RootsProduct((2j,))), 2j)


def test_newton_quotient_raises_at_a_critical_point_of_p():
  with pytest.raises(PoleAt):
    eval_f(NewtonQuotient(Coeffs((-1, 0, 1))), 0)


def test_exponential_overflows_past_the_cap():
  with pytest.raises(Overflow):
    eval_jet(ExpAffine(1, 0), 400)


def test_exponential_jet():
  spec = ExpAffine(2j, -1)
  z = 0.3 + 0.1j
  e = cmath.exp(2j * z)

  jet = eval_jet(spec, z)

  assert jet.f == pytest.approx(e - 1)
  assert jet.df == pytest.approx(2j * e)
  assert jet.d2f == pytest.approx(-4 * e)


def test_gradient_and_hessian_of_identity():
  jet = eval_jet(Coeffs((0, 1)), 1)

  assert grad_F(jet) == (1.0, 0.0)
  assert hess_F(jet).to_list() == [[1.0, 0.0], [0.0, 1.0]]


@pytest.mark.parametrize("spec", SPECS)
def test_hessian_eigenvalues_are_derivative_squared_plus_minus_f_times_second(spec):
  z = 0.37 + 0.61j
  jet = eval_jet(spec, z)
  a = abs(jet.df) ** 2
  b = abs(jet.f * jet.d2f)

  eig = eigen_sym2(hess_F(jet))

  assert sorted([eig.lam1, eig.lam2]) == pytest.approx([a - b, a + b], rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("spec", SPECS)
def test_gradient_matches_finite_differences_of_F(spec):
  z = 0.37 + 0.61j
  h = 1e-6

  grad = grad_hess(eval_jet(spec, z)).grad

  dx = (fvalue(spec, z + h) - fvalue(spec, z - h)) / (2 * h)
  dy = (fvalue(spec, z + 1j * h) - fvalue(spec, z - 1j * h)) / (2 * h)
  assert grad == pytest.approx((dx, dy), rel=1e-5, abs=1e-8)


@pytest.mark.parametrize("spec, z, kind", [
  (QUARTIC, 1, PointKind.ROOT),
  (QUARTIC, 0, PointKind.CRITICAL),
  (QUARTIC, 0.5, PointKind.REGULAR),
  (Rational(Coeffs((1,)), Coeffs((0, 1))), 0, PointKind.POLE),
  (NewtonQuotient(Coeffs((1, -2, 1))), 1, PointKind.ROOT),
  (NewtonQuotient(RootsProduct((1, 1, 3))), 1, PointKind.ROOT),
  (Coeffs((0, 1)), 1e200, PointKind.REGULAR),
  (ExpAffine(1, 0), 400, PointKind.REGULAR),
  (Rational(Coeffs((1,)), Coeffs((0, 1))), 1e-200, PointKind.POLE),
])
def test_classify_point(spec, z, kind):
  assert classify_point(spec, z) is kind


def test_spec_from_dict_reads_every_kind():
  data = {
    "kind": "newton_quotient",
    "p": {"kind": "rational_not_allowed"},
  }
  with pytest.raises(ConfigError) as err:
    spec_from_dict(data)
  assert err.value.field == "function.p"

  spec = spec_from_dict({"kind": "roots_product", "roots": [[1, 0], [0, 2]]})
  assert spec == RootsProduct((1, 2j))


@pytest.mark.parametrize("spec", SPECS)
def test_spec_dict_form_reads_back_equal(spec):
  assert spec_from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("data", [
  {},
  {"kind": "coeffs"},
  {"kind": "coeffs", "coeffs": [[1, 0], [0, 0]]},
  {"kind": "exp_affine", "a": [0, 0], "b": [1, 0]},
  {"kind": "coeffs", "coeffs": [["nan", 0], [1, 0]]},
])
def test_malformed_function_is_a_config_error(data):
  with pytest.raises(ConfigError):
    spec_from_dict(data)


def test_as_point_rejects_infinity():
  with pytest.raises(ValueError):
    as_point(complex(math.inf, 0))


@pytest.mark.parametrize("spec", SPECS)
def test_compose_linear_evaluates_f_at_alpha_z(spec):
  alpha = 2 * cmath.exp(1j * math.pi / 3)
  z = 0.21 - 0.13j

  g = compose_linear(spec, alpha)

  assert eval_f(g, z) == pytest.approx(eval_f(spec, alpha * z), rel=1e-10)


@pytest.mark.parametrize("spec", SPECS)
def test_conjugate_spec_evaluates_conjugate_of_f_at_conjugate_z(spec):
  z = 0.21 - 0.13j

  g = conjugate_spec(spec)

  assert eval_f(g, z) == pytest.approx(eval_f(spec, z.conjugate()).conjugate(), rel=1e-10)


def test_real_spec_detection():
  assert is_real_spec(QUARTIC)
  assert is_real_spec(RootsProduct((1, 2, -1, 7)))
  assert not is_real_spec(MIXED)


def test_taylor_coefficients_and_local_order():
  # 1 + z^3 around 0
  spec = Coeffs((1, 0, 0, 1))

  assert taylor_coefficients(spec, 0, 3) == pytest.approx([1, 0, 0, 1])
  assert local_order(spec, 0) == 3
  assert local_order(spec, 1) == 1


def test_roots_of_quartic_unity():
  roots = spec_roots(QUARTIC)

  assert len(roots) == 4
  for target in (1, -1, 1j, -1j):
    assert min(abs(r - target) for r in roots) < 1e-12


def test_spec_roots_merges_repeated_roots():
  assert spec_roots(RootsProduct((2, 2, -1))) == [-1, 2]


def test_critical_point_of_quartic_unity_is_the_origin_with_order_four():
  found = critical_points(QUARTIC)

  assert len(found) == 1
  assert abs(found[0].z) < 1e-12
  assert found[0].order == 4
  assert found[0].value == pytest.approx(1)


def test_critical_points_skip_multiple_roots():
  # (z - 1)^2 (z + 2) has f' = 0 at 1 (a root) and at -1 (not a root)
  found = critical_points(RootsProduct((1, 1, -2)))

  assert [c.z for c in found] == pytest.approx([-1])
  assert found[0].order == 2


def _points_away_from(poles, count, seed=7, margin=0.3):
  rng = np.random.default_rng(seed)
  points = []
  while len(points) < count:
    z = complex(*rng.uniform(-2.5, 2.5, size=2))
    if all(abs(z - p) > margin for p in poles):
      points.append(z)
  return points


NQ_P = RootsProduct((1, -1, 2j))
QUOTIENTS = [
  (Rational(RootsProduct((1, -2j)), RootsProduct((0.5 + 0.5j, -1.5))), [0.5 + 0.5j, -1.5]),
  (NewtonQuotient(NQ_P), list(P.polyroots(P.polyder(NQ_P.to_coeffs())))),
]


@pytest.mark.parametrize("spec, poles", QUOTIENTS)
def test_hessian_matches_finite_differences_of_the_gradient(spec, poles):
  for z in _points_away_from(poles, 100):
    h = 1e-6 * max(1.0, abs(z))
    hess = hess_F(eval_jet(spec, z)).to_list()
    gx_plus, gx_minus = grad_F(eval_jet(spec, z + h)), grad_F(eval_jet(spec, z - h))
    gy_plus, gy_minus = grad_F(eval_jet(spec, z + 1j * h)), grad_F(eval_jet(spec, z - 1j * h))
    columns = [
      [(a - b) / (2 * h) for a, b in zip(gx_plus, gx_minus)],
      [(a - b) / (2 * h) for a, b in zip(gy_plus, gy_minus)],
    ]
    numeric = [[columns[0][0], columns[1][0]], [columns[0][1], columns[1][1]]]
    size = max(abs(x) for row in hess for x in row)
    for row, expected in zip(hess, numeric):
      assert row == pytest.approx(expected, rel=1e-4, abs=1e-6 * size), z


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("r", [1e-2, 1e-3])
def test_hessian_near_a_degenerate_critical_point_has_opposite_eigenvalues(d, r):
  # 1 + z^d: |f'|^2 is negligible next to |f f''| = d(d-1) r^(d-2)
  spec = Coeffs((1,) + (0,) * (d - 1) + (1,))
  eig = eigen_sym2(hess_F(eval_jet(spec, r * cmath.exp(0.7j))))
  size = d * (d - 1) * r ** (d - 2)

  assert sorted([eig.lam1, eig.lam2]) == pytest.approx([-size, size], rel=5 * r)


@pytest.mark.parametrize("z", [0.4 - 0.9j, 1.7 + 0.3j, -2.2 + 1.1j])
def test_newton_quotient_derivatives_follow_from_p(z):
  coeffs = NQ_P.to_coeffs()
  p0, p1, p2, p3 = [P.polyval(z, P.polyder(coeffs, k)) for k in range(4)]

  jet = eval_jet(NewtonQuotient(NQ_P), z)

  assert jet.df == pytest.approx(1 - p0 * p2 / p1**2, rel=1e-10)
  assert jet.d2f == pytest.approx(-(p1 * p2 + p0 * p3) / p1**2 + 2 * p0 * p2**2 / p1**3, rel=1e-10)


def test_newton_quotient_is_removable_at_a_double_root_of_p():
  # P = (z - 1)^2 (z - 3) = -2h^2 + h^3 around h = z - 1, so P/P' = h/2 + h^2/8 + ...
  jet = eval_jet(NewtonQuotient(RootsProduct((1, 1, 3))), 1)

  assert jet.f == 0
  assert jet.df == pytest.approx(0.5)
  assert jet.d2f == pytest.approx(0.25)
  assert eval_f(NewtonQuotient(RootsProduct((1, 1, 3))), 1) == 0
