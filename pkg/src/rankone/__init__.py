"""Iterated random rank-one perturbations of multiplication operators."""

__version__ = "0.1.0"

from .errors import (ConvergenceWarning, Localized, NumericalError, PerturbationPole,  # noqa: E402
                     RankOneError, SingularPointError)
from .measures import (AcPart, Box, Grid, PointMass, SpectralMeasure, ac_mass,  # noqa: E402
                       box_measure, grid_measure, scale_to_box, total_mass)

__all__ = [
    "__version__",
    "AcPart", "Box", "Grid", "PointMass", "SpectralMeasure",
    "ac_mass", "box_measure", "grid_measure", "scale_to_box", "total_mass",
    "ConvergenceWarning", "Localized", "NumericalError", "PerturbationPole",
    "RankOneError", "SingularPointError",
]
