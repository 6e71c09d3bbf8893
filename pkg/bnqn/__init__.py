from .baselines import METHODS, MethodParams, run_method
from .basins import GridSpec, basin_stats, classify_grid, render_ppm, voronoi_raster
from .core import BnqnParams, OutcomeKind, bnqn_step, conjugacy_check, run
from .errors import BnqnError, ConfigError
from .funcs import Coeffs, ExpAffine, NewtonQuotient, Rational, RootsProduct, spec_from_dict

# bnqn/
# ├── linalg2.py     2x2 symmetric eigen-solver and signed projections
# ├── funcs.py       function specs, jets, F and its derivatives
# ├── core.py        the BNQN step and run loop
# ├── baselines.py   Newton, relaxed, random relaxed, Newton for optimisation, flow
# ├── localdyn.py    behaviour near critical points, convergence rates
# ├── basins.py      basin grids, Voronoi reference, PPM output
# ├── presets.py     ready-made experiments
# ├── config.py      JSON config and flag overrides
# ├── reporting.py   JSON, CSV and image writers
# └── cli.py         python -m bnqn
