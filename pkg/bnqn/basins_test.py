import io
import math

import numpy as np
import pytest
from PIL import Image

from bnqn.basins import (
  BLACK,
  CRITICAL,
  DIVERGED,
  PALETTE,
  UNRESOLVED,
  WHITE,
  BasinImage,
  GridSpec,
  basin_stats,
  boundary_adjacency_count,
  boundary_band,
  classify_grid,
  cluster_points,
  known_roots,
  label_root_permutation,
  match_root,
  permute_labels,
  render_ppm,
  voronoi_raster,
)
from bnqn.errors import ConfigError, EmptySites, PaletteTooSmall
from bnqn.funcs import Coeffs, ExpAffine, NewtonQuotient, Rational, RootsProduct
from bnqn.presets import get_preset

QUARTIC = Coeffs((1, 0, 0, 0, -1))
QUARTIC_PARAMS = get_preset("quartic_unity").method_params()


def test_pixel_centres_put_row_zero_at_the_top():
  grid = GridSpec(0j, 1.0, 1.0, 2, 2)

  assert grid.point(0, 0) == -0.5 + 0.5j
  assert grid.point(1, 1) == 0.5 - 0.5j
  assert grid.points()[0, 1] == grid.point(1, 0)


def test_points_array_is_rows_by_columns():
  grid = GridSpec(1 + 1j, 3.0, 2.0, 7, 5)

  points = grid.points()

  assert points.shape == (5, 7)
  assert points[4, 6] == pytest.approx(grid.point(6, 4))


@pytest.mark.parametrize("data, field", [
  ({"nx": 0}, "grid.nx"),
  ({"nx": 2.5}, "grid.nx"),
  ({"half_width": -1}, "grid.half_width"),
  ({"center": "middle"}, "grid"),
])
def test_invalid_grid_names_the_field(data, field):
  with pytest.raises(ConfigError) as err:
    GridSpec.from_dict(data)
  assert err.value.field == field


def test_voronoi_splits_the_plane_between_two_sites():
  grid = GridSpec(0j, 2.0, 1.0, 4, 2)

  image = voronoi_raster([-1, 1], grid)

  assert image.labels.tolist() == [[0, 0, 1, 1], [0, 0, 1, 1]]


def test_voronoi_ties_go_to_the_lower_index():
  grid = GridSpec(0j, 1.0, 1.0, 1, 1)

  assert voronoi_raster([1j, -1j], grid).labels[0, 0] == 0


def test_voronoi_needs_sites():
  with pytest.raises(EmptySites):
    voronoi_raster([], GridSpec(nx=4, ny=4))


def test_voronoi_refuses_duplicate_sites():
  with pytest.raises(ValueError):
    voronoi_raster([1, 1], GridSpec(nx=4, ny=4))


def _image(labels, roots=(1, -1)):
  labels = np.array(labels, dtype=np.int64)
  ny, nx = labels.shape
  return BasinImage(GridSpec(0j, 1.0, 1.0, nx, ny), labels, np.zeros_like(labels), list(roots))


def test_ppm_header_and_colours_decode():
  image = _image([[0, 1, CRITICAL], [DIVERGED, UNRESOLVED, 0]])

  data = render_ppm(image)

  assert data.startswith(b"P6\n3 2\n255\n")
  assert len(data) == len(b"P6\n3 2\n255\n") + 3 * 2 * 3
  decoded = Image.open(io.BytesIO(data))
  assert decoded.size == (3, 2)
  assert decoded.getpixel((0, 0)) == PALETTE[0]
  assert decoded.getpixel((1, 0)) == PALETTE[1]
  assert decoded.getpixel((2, 0)) == WHITE
  assert decoded.getpixel((0, 1)) == BLACK
  assert decoded.getpixel((1, 1)) == BLACK


def test_palette_must_cover_every_root():
  with pytest.raises(PaletteTooSmall):
    render_ppm(_image([[0, 1]]), palette=PALETTE[:1])


def test_boundary_adjacency_counts_differing_neighbours():
  labels = np.array([[0, 0, 1], [0, 1, 1]])

  # horizontal: (0,1) in row 0, (0,1) in row 1; vertical: column 1
  assert boundary_adjacency_count(labels) == 3


def test_boundary_band_marks_both_sides_of_a_change():
  band = boundary_band(np.array([[0, 0, 1, 1]]))

  assert band.tolist() == [[False, True, True, False]]


def test_basin_stats_fractions():
  stats = basin_stats(_image([[0, 0, 1, CRITICAL], [DIVERGED, UNRESOLVED, 0, 1]]))

  assert stats.coverage == pytest.approx(5 / 8)
  assert stats.per_root_fraction == pytest.approx([3 / 8, 2 / 8])
  assert stats.critical_fraction == pytest.approx(1 / 8)
  assert stats.diverged_fraction == pytest.approx(1 / 8)
  assert stats.unresolved_fraction == pytest.approx(1 / 8)
  assert sorted(stats.to_dict()) == [
    "boundary_adjacency_count",
    "coverage",
    "critical_fraction",
    "diverged_fraction",
    "per_root_fraction",
    "roots",
    "unresolved_fraction",
  ]


def test_cluster_points_merges_nearby_endpoints():
  centres = cluster_points([1 + 1e-7j, -1, 1 - 1e-7j, -1 + 2e-7])

  assert centres == pytest.approx([-1 + 1e-7, 1])


def test_match_root_within_radius():
  assert match_root(1 + 1e-6, [-1, 1]) == 1
  assert match_root(1 + 1e-3, [-1, 1]) is None


def test_quarter_turn_permutes_the_quartic_roots():
  roots = [-1, -1j, 1j, 1]

  perm = label_root_permutation(roots, lambda z: 1j * z)

  assert perm == [1, 3, 0, 2]
  assert permute_labels(np.array([[0, CRITICAL, 3]]), perm).tolist() == [[1, CRITICAL, 2]]


def test_classify_grid_finds_the_four_roots_of_unity():
  # nx != ny keeps pixel centres off the diagonals, which are stable rays of the saddle
  image = classify_grid(QUARTIC, methods=QUARTIC_PARAMS, grid=GridSpec(0j, 2.0, 2.0, 32, 24))

  assert len(image.roots) == 4
  for root in image.roots:
    assert abs(root**4 - 1) < 1e-6
  assert basin_stats(image).coverage == 1.0
  assert image.iters.max() < 200
  assert image.metadata["deltas"] == [0.0, 1e-3, 2e-3]
  assert image.labels[12, 31] == match_root(1, image.roots, 1e-4)


def test_classify_grid_with_known_roots_keeps_their_order():
  roots = [1, -1, 1j, -1j]

  image = classify_grid(QUARTIC, grid=GridSpec(0j, 2.0, 2.0, 8, 6), roots=roots)

  assert image.roots == roots
  assert image.labels[3, 7] == 0
  assert image.labels[3, 0] == 1


def test_worker_count_does_not_change_the_image():
  grid = GridSpec(0.1 + 0.2j, 2.0, 1.5, 10, 6)

  single = classify_grid(QUARTIC, "random_relaxed", grid=grid, threads=1)
  pooled = classify_grid(QUARTIC, "random_relaxed", grid=grid, threads=2)

  assert np.array_equal(single.labels, pooled.labels)
  assert np.array_equal(single.iters, pooled.iters)
  assert single.roots == pooled.roots


def test_known_roots_of_the_exponential_strip():
  roots = known_roots(ExpAffine(2j, -1), GridSpec(0j, 10.0, 10.0, 4, 4))

  assert roots == pytest.approx([math.pi * k for k in range(-3, 4)], abs=1e-12)


def test_known_roots_of_a_newton_quotient_are_those_of_p():
  preset = get_preset("newton_quotient")

  roots = known_roots(preset.function, preset.grid)

  assert len(roots) == 5
  assert roots == pytest.approx(sorted(preset.function.p.roots, key=lambda w: (w.real, w.imag)))


def test_known_roots_of_a_rational_function_skip_cancelled_poles():
  spec = Rational(RootsProduct((1, 2)), RootsProduct((2,)))

  assert known_roots(spec, GridSpec()) == pytest.approx([1])


def test_exponential_without_roots():
  assert known_roots(ExpAffine(1, 0), GridSpec()) == []


def test_basins_of_a_real_polynomial_mirror_top_to_bottom():
  image = classify_grid(QUARTIC, methods=QUARTIC_PARAMS, grid=GridSpec(0j, 2.0, 2.0, 32, 24))
  perm = label_root_permutation(image.roots, lambda z: z.conjugate())

  flipped = image.labels[::-1]
  expected = permute_labels(image.labels, perm)
  settled = ~(boundary_band(image.labels) | boundary_band(flipped))

  assert settled.mean() > 0.5
  assert np.array_equal(flipped[settled], expected[settled])


def test_voronoi_image_of_two_sites_splits_left_and_right():
  image = voronoi_raster([-1, 1], GridSpec(0j, 2.0, 2.0, 64, 64))
  row = bytes(PALETTE[0]) * 32 + bytes(PALETTE[1]) * 32

  assert render_ppm(image) == b"P6\n64 64\n255\n" + row * 64


def test_rendering_the_same_grid_twice_gives_the_same_bytes():
  grid = GridSpec(0.1 + 0.2j, 2.0, 1.5, 12, 10)

  first = render_ppm(classify_grid(QUARTIC, methods=QUARTIC_PARAMS, grid=grid))
  second = render_ppm(classify_grid(QUARTIC, methods=QUARTIC_PARAMS, grid=grid, threads=2))

  assert first == second
