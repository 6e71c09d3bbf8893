"""Ready-made functions, plotting windows and basin parameters for the standard experiments.

The kappa test compares minsp(Hess F), which scales like |f|^2, with
kappa * ||grad F||^2, which scales like |f|^4. Deltas therefore carry units of
1/|f|^2: with the library default (0, 1, 2) on 1 - z^4, delta_0 is rejected
outside the unit disc and the step shrinks to about 1/||grad F||. Each preset
picks deltas small enough that delta_0 (or a delta_1 comparable to the
Hessian) is chosen across its whole window.
"""

from dataclasses import dataclass, field

from .baselines import MethodParams
from .basins import GridSpec
from .errors import ConfigError
from .funcs import Coeffs, ExpAffine, NewtonQuotient, RootsProduct

# |f| up to about 60 on [-2, 2]^2
SMALL_WINDOW_DELTAS = [0.0, 1e-3, 2e-3]
# |f| up to about 1.3e4 on the 12 x 12 quartic windows
WIDE_WINDOW_DELTAS = [0.0, 1e-10, 2e-10]
# |exp(2iz)| reaches e^20 at Im z = -10, and minsp(Hess F) grows only like |f|
EXP_STRIP_DELTAS = [0.0, 1e-27, 2e-27]


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    function: object
    grid: GridSpec
    params: dict = field(default_factory=dict)

    def method_params(self):
        return MethodParams.from_dict(self.params)


_PRESETS = [
    Preset(
        "quartic_unity",
        "1 - z^4",
        Coeffs((1, 0, 0, 0, -1)),
        GridSpec(0j, 2.0, 2.0, 512, 512),
        {"bnqn": {"deltas": SMALL_WINDOW_DELTAS}},
    ),
    Preset(
        "real_quartic",
        "(z-1)(z-2)(z+1)(z-7)",
        RootsProduct((1, 2, -1, 7)),
        GridSpec(3 + 0j, 6.0, 6.0, 512, 512),
        {"bnqn": {"deltas": WIDE_WINDOW_DELTAS}},
    ),
    Preset(
        "mixed_quartic",
        "(z+2)(z-5)(z-1-4i)z",
        RootsProduct((-2, 5, 1 + 4j, 0)),
        GridSpec(1.5 + 2j, 6.0, 6.0, 512, 512),
        {"bnqn": {"deltas": WIDE_WINDOW_DELTAS}},
    ),
    Preset(
        "mixed_quartic_2",
        "(z+2)(z-5)(z-1-4i)(z-3-i)",
        RootsProduct((-2, 5, 1 + 4j, 3 + 1j)),
        GridSpec(1.5 + 2j, 6.0, 6.0, 512, 512),
        {"bnqn": {"deltas": WIDE_WINDOW_DELTAS}},
    ),
    Preset(
        "exp_strip",
        "exp(2iz) - 1",
        ExpAffine(2j, -1),
        GridSpec(0j, 10.0, 10.0, 512, 512),
        {"bnqn": {"deltas": EXP_STRIP_DELTAS}},
    ),
    Preset(
        "newton_quotient",
        "P/P' with P = z(z-2i)(z-5-2i)(z-3+3i)(z-2-i)",
        NewtonQuotient(RootsProduct((0, 2j, 5 + 2j, 3 - 3j, 2 + 1j))),
        GridSpec(2.5 + 0.5j, 5.0, 5.0, 512, 512),
    ),
    Preset(
        "saddle_quadratic",
        "1 + z^2",
        Coeffs((1, 0, 1)),
        GridSpec(0j, 2.0, 2.0, 512, 512),
        {"bnqn": {"deltas": SMALL_WINDOW_DELTAS}},
    ),
    Preset(
        "saddle_cubic",
        "1 + z^3",
        Coeffs((1, 0, 0, 1)),
        GridSpec(0j, 2.0, 2.0, 512, 512),
        {"bnqn": {"deltas": SMALL_WINDOW_DELTAS}},
    ),
]

PRESETS = {preset.name: preset for preset in _PRESETS}


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}, expected one of {', '.join(sorted(PRESETS))}") from None
