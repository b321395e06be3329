"""Director fields on twisted tori: frame calculus, Sobolev estimates, heat flow and energy audits."""

from .director_field import (
    DirectorField,
    TwistError,
    chart_extract,
    constant_field,
    gen_angle_ansatz,
    gen_equator,
    gen_f2,
    gen_pole_free,
    gen_random_bandlimited,
    normalize,
)
from .report import EstimateReport
from .torus_grid import EVEN, ODD, SampledField, TorusGrid, new_grid

__version__ = "0.1.0"

__all__ = [
    "DirectorField",
    "EVEN",
    "EstimateReport",
    "ODD",
    "SampledField",
    "TorusGrid",
    "TwistError",
    "chart_extract",
    "constant_field",
    "gen_angle_ansatz",
    "gen_equator",
    "gen_f2",
    "gen_pole_free",
    "gen_random_bandlimited",
    "new_grid",
    "normalize",
]
