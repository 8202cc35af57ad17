"""levylab: simulation and statistical verification of non-Gaussian random
measures (gamma, stable, tempered-stable) and their normalized charge laws."""

from .core import (
    Atom,
    BaseSpace,
    CallableFunction,
    ConicSequence,
    DiscreteMeasure,
    SimplexSequence,
    StepFunction,
    conic_part,
    functional_f_a,
    log1p_integral,
    log_integral,
    normalize,
)
from .models import GammaModel, LevyModel, StableModel, TemperedStableModel, make_model
from .rng import RandomStream
from .samplers import (
    LevyDraws,
    TruncationPolicy,
    recover_stable_scale,
    sample_cpd,
    sample_levy,
    sample_levy_batch,
    sample_pd_alpha_theta,
    sample_pd_theta,
    sample_p_alpha_theta_weighted,
    sample_tilted_scaled_stable,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "BaseSpace",
    "CallableFunction",
    "ConicSequence",
    "DiscreteMeasure",
    "GammaModel",
    "LevyDraws",
    "LevyModel",
    "RandomStream",
    "SimplexSequence",
    "StableModel",
    "StepFunction",
    "TemperedStableModel",
    "TruncationPolicy",
    "conic_part",
    "functional_f_a",
    "log1p_integral",
    "log_integral",
    "make_model",
    "normalize",
    "recover_stable_scale",
    "sample_cpd",
    "sample_levy",
    "sample_levy_batch",
    "sample_pd_alpha_theta",
    "sample_pd_theta",
    "sample_p_alpha_theta_weighted",
    "sample_tilted_scaled_stable",
    "__version__",
]
