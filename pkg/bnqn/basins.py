"""Basins of attraction, Voronoi rasters, PPM rendering and basin statistics.

Labels are integers: k >= 0 is the index of a root in ``BasinImage.roots``,
the negative codes below mark everything else. Arrays are (ny, nx) with row 0
at the top of the picture, i.e. at the largest imaginary part.
"""

import cmath
import logging
import math
import multiprocessing as mp
from dataclasses import dataclass, field

import numpy as np

from .baselines import MethodParams, run_method
from .core import OutcomeKind
from .errors import BnqnError, ConfigError, EmptySites, PaletteTooSmall
from .funcs import ExpAffine, NewtonQuotient, Rational, as_point, point_to_list, spec_roots

logger = logging.getLogger(__name__)

CRITICAL = -1
DIVERGED = -2
UNRESOLVED = -3

MATCH_RADIUS = 1e-5
CLUSTER_EPS = 1e-5

WHITE = (255, 255, 255)
BLACK = (0, 0, 0)

# qualitative palette, one colour per root index
PALETTE = (
    (230, 25, 75),
    (60, 180, 75),
    (255, 225, 25),
    (0, 130, 200),
    (245, 130, 48),
    (145, 30, 180),
    (70, 240, 240),
    (240, 50, 230),
    (210, 245, 60),
    (250, 190, 190),
    (0, 128, 128),
    (170, 110, 40),
)


@dataclass(frozen=True)
class GridSpec:
    center: complex = 0j
    half_width: float = 2.0
    half_height: float = 2.0
    nx: int = 512
    ny: int = 512

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        for name in ("half_width", "half_height"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, f"must be > 0, got {getattr(self, name)}")
        for name in ("nx", "ny"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ConfigError(name, f"must be a positive integer, got {value}")
            object.__setattr__(self, name, int(value))

    def point(self, i, j):
        """Centre of pixel column i, row j."""
        re = self.center.real + ((i + 0.5) / self.nx - 0.5) * 2.0 * self.half_width
        im = self.center.imag + (0.5 - (j + 0.5) / self.ny) * 2.0 * self.half_height
        return complex(re, im)

    def points(self):
        """All pixel centres as a (ny, nx) complex array."""
        re = self.center.real + ((np.arange(self.nx) + 0.5) / self.nx - 0.5) * 2.0 * self.half_width
        im = self.center.imag + (0.5 - (np.arange(self.ny) + 0.5) / self.ny) * 2.0 * self.half_height
        return re[np.newaxis, :] + 1j * im[:, np.newaxis]

    def contains(self, z):
        return (
            abs(z.real - self.center.real) <= self.half_width
            and abs(z.imag - self.center.imag) <= self.half_height
        )

    @classmethod
    def from_dict(cls, data, where="grid"):
        try:
            return cls(
                as_point(data.get("center", [0.0, 0.0])),
                float(data.get("half_width", 2.0)),
                float(data.get("half_height", data.get("half_width", 2.0))),
                data.get("nx", 512),
                data.get("ny", data.get("nx", 512)),
            )
        except ConfigError as err:
            raise ConfigError(f"{where}.{err.field}", str(err).split(": ", 1)[1]) from err
        except (TypeError, ValueError, AttributeError) as err:
            raise ConfigError(where, str(err)) from err

    def to_dict(self):
        return {
            "center": point_to_list(self.center),
            "half_width": self.half_width,
            "half_height": self.half_height,
            "nx": self.nx,
            "ny": self.ny,
        }


@dataclass
class BasinImage:
    grid: GridSpec
    labels: np.ndarray
    iters: np.ndarray
    roots: list
    metadata: dict = field(default_factory=dict)


def _classify_row(task):
    spec, method, methods, grid, j = task
    row = []
    for i in range(grid.nx):
        z0 = grid.point(i, j)
        try:
            _, outcome = run_method(method, z0, spec, methods, stream=j * grid.nx + i)
        except (BnqnError, ArithmeticError) as err:
            logger.debug("pixel (%d, %d) unresolved: %s", i, j, err)
            row.append((None, z0, 0))
            continue
        row.append((outcome.kind, outcome.z, outcome.iters))
    return row


def cluster_points(points, eps=CLUSTER_EPS):
    """Group points lying within eps of a group's first member.

    Groups are formed over the points sorted by (re, im), so the result does
    not depend on the order the points were produced in. Centres come back
    sorted by (re, im) rounded to 6 decimals.
    """
    groups = []
    for p in sorted(points, key=lambda w: (w.real, w.imag)):
        for group in groups:
            if abs(group[0] - p) <= eps:
                group.append(p)
                break
        else:
            groups.append([p])
    centres = [complex(np.mean([g.real for g in grp]), np.mean([g.imag for g in grp])) for grp in groups]
    return sorted(centres, key=lambda w: (round(w.real, 6), round(w.imag, 6)))


def match_root(z, roots, radius=MATCH_RADIUS):
    """Index of the first root within radius of z, or None."""
    for k, root in enumerate(roots):
        if abs(z - root) <= radius:
            return k
    return None


def classify_grid(
    spec,
    method="bnqn",
    methods=MethodParams(),
    grid=GridSpec(),
    roots=None,
    threads=1,
    match_radius=MATCH_RADIUS,
    cluster_eps=CLUSTER_EPS,
):
    """Run a method from every pixel centre and label the outcome.

    Args:
        spec: the FunctionSpec
        method: a method selector, see baselines.METHODS
        methods: MethodParams
        grid: GridSpec
        roots: known roots; discovered from the endpoints when omitted,
            keeping only clusters that lie inside the grid rectangle
        threads: worker processes; 1 runs inline. Rows are reassembled in
            order, so the result does not depend on this value.

    Returns:
        BasinImage
    """
    tasks = [(spec, method, methods, grid, j) for j in range(grid.ny)]
    if threads > 1:
        with mp.Pool(processes=threads) as pool:
            rows = pool.map(_classify_row, tasks)
    else:
        rows = [_classify_row(task) for task in tasks]

    if roots is None:
        endpoints = [z for row in rows for kind, z, _ in row if kind is OutcomeKind.ROOT]
        roots = [c for c in cluster_points(endpoints, cluster_eps) if grid.contains(c)]
        logger.info("discovered %d roots", len(roots))
    roots = [as_point(r) for r in roots]

    labels = np.full((grid.ny, grid.nx), UNRESOLVED, dtype=np.int64)
    iters = np.zeros((grid.ny, grid.nx), dtype=np.int64)
    for j, row in enumerate(rows):
        for i, (kind, z, n) in enumerate(row):
            iters[j, i] = n
            if kind is OutcomeKind.ROOT:
                k = match_root(z, roots, match_radius)
                labels[j, i] = UNRESOLVED if k is None else k
            elif kind is OutcomeKind.CRITICAL:
                labels[j, i] = CRITICAL
            elif kind is OutcomeKind.DIVERGED:
                labels[j, i] = DIVERGED

    metadata = {
        "method": method,
        "resolution": [grid.nx, grid.ny],
        "max_iter": methods.bnqn.max_iter,
        "root_tol": methods.bnqn.root_tol,
        "deltas": list(methods.bnqn.deltas),
        "tau": methods.bnqn.tau,
        "theta": methods.bnqn.theta,
        "match_radius": match_radius,
        "cluster_eps": cluster_eps,
    }
    return BasinImage(grid, labels, iters, roots, metadata)


def voronoi_raster(sites, grid):
    """Label every pixel with its nearest site; ties go to the lower index."""
    sites = [as_point(s) for s in sites]
    if not sites:
        raise EmptySites("at least one site is required")
    if len(set(sites)) != len(sites):
        raise ValueError("sites must be pairwise distinct")
    points = grid.points()
    distances = np.abs(points[:, :, np.newaxis] - np.array(sites)[np.newaxis, np.newaxis, :])
    labels = np.argmin(distances, axis=2).astype(np.int64)
    iters = np.zeros_like(labels)
    return BasinImage(grid, labels, iters, sites, {"method": "voronoi", "resolution": [grid.nx, grid.ny]})


def colour_array(image, palette=PALETTE):
    """(ny, nx, 3) uint8 colours for the labels."""
    if len(palette) < len(image.roots):
        raise PaletteTooSmall(len(image.roots), len(palette))
    labels = image.labels
    rgb = np.zeros(labels.shape + (3,), dtype=np.uint8)
    for k in range(len(image.roots)):
        rgb[labels == k] = palette[k]
    rgb[labels == CRITICAL] = WHITE
    return rgb


def render_ppm(image, palette=PALETTE):
    """Binary P6 bytes, top row first."""
    rgb = colour_array(image, palette)
    header = f"P6\n{image.grid.nx} {image.grid.ny}\n255\n".encode("ascii")
    return header + rgb.tobytes()


@dataclass(frozen=True)
class BasinStats:
    coverage: float
    per_root_fraction: list
    boundary_adjacency_count: int
    unresolved_fraction: float
    critical_fraction: float
    diverged_fraction: float
    roots: list

    def to_dict(self):
        return {
            "coverage": self.coverage,
            "per_root_fraction": list(self.per_root_fraction),
            "boundary_adjacency_count": self.boundary_adjacency_count,
            "unresolved_fraction": self.unresolved_fraction,
            "critical_fraction": self.critical_fraction,
            "diverged_fraction": self.diverged_fraction,
            "roots": [point_to_list(r) for r in self.roots],
        }


def boundary_adjacency_count(labels):
    """Number of 4-neighbour pixel pairs whose labels differ."""
    horizontal = np.count_nonzero(labels[:, 1:] != labels[:, :-1])
    vertical = np.count_nonzero(labels[1:, :] != labels[:-1, :])
    return int(horizontal + vertical)


def basin_stats(image):
    labels = image.labels
    total = labels.size
    per_root = [float(np.count_nonzero(labels == k)) / total for k in range(len(image.roots))]
    return BasinStats(
        coverage=float(np.count_nonzero(labels >= 0)) / total,
        per_root_fraction=per_root,
        boundary_adjacency_count=boundary_adjacency_count(labels),
        unresolved_fraction=float(np.count_nonzero(labels == UNRESOLVED)) / total,
        critical_fraction=float(np.count_nonzero(labels == CRITICAL)) / total,
        diverged_fraction=float(np.count_nonzero(labels == DIVERGED)) / total,
        roots=list(image.roots),
    )


def label_root_permutation(roots, transform, radius=MATCH_RADIUS):
    """perm[k] = index of transform(roots[k]) among roots.

    Raises:
        ValueError: some image of a root is not itself a root.
    """
    perm = []
    for root in roots:
        k = match_root(transform(root), roots, radius)
        if k is None:
            raise ValueError(f"{transform(root)} is not among the roots")
        perm.append(k)
    return perm


def permute_labels(labels, perm):
    """Apply a root permutation to a label array, leaving negative codes alone."""
    out = labels.copy()
    for k, target in enumerate(perm):
        out[labels == k] = target
    return out


def boundary_band(labels):
    """Mask of pixels whose 4-neighbourhood contains a label change."""
    band = np.zeros(labels.shape, dtype=bool)
    horizontal = labels[:, 1:] != labels[:, :-1]
    vertical = labels[1:, :] != labels[:-1, :]
    band[:, 1:] |= horizontal
    band[:, :-1] |= horizontal
    band[1:, :] |= vertical
    band[:-1, :] |= vertical
    return band


def known_roots(spec, grid):
    """Roots of f inside the grid rectangle, computed from the function definition.

    Polynomials go through their companion matrix, rational functions through
    the numerator (minus poles), and exp(a z) + b through its logarithm branches.
    """
    if isinstance(spec, ExpAffine) and spec.b == 0:
        candidates = []
    elif isinstance(spec, ExpAffine):
        w = cmath.log(-spec.b)
        reach = abs(grid.center) + math.hypot(grid.half_width, grid.half_height)
        kmax = int((abs(spec.a) * reach + abs(w)) / (2.0 * math.pi)) + 1
        candidates = [(w + 2j * math.pi * k) / spec.a for k in range(-kmax, kmax + 1)]
    elif isinstance(spec, NewtonQuotient):
        candidates = spec_roots(spec.p)
    elif isinstance(spec, Rational):
        poles = spec_roots(spec.den)
        candidates = [z for z in spec_roots(spec.num) if all(abs(z - p) > CLUSTER_EPS for p in poles)]
    else:
        candidates = spec_roots(spec)
    inside = [z for z in candidates if grid.contains(z)]
    return sorted(inside, key=lambda w: (round(w.real, 6), round(w.imag, 6)))
