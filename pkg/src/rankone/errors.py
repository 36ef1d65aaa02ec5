"""Exception hierarchy shared by all modules."""


class RankOneError(Exception):
    """Base class for errors raised by this package."""


class NumericalError(RankOneError):
    """A kernel could not produce a finite answer."""


class SingularPointError(NumericalError, ValueError):
    """Evaluation point sits on the support, at an atom or at a support endpoint."""


class PerturbationPole(NumericalError, ZeroDivisionError):
    """1 + alpha * F vanishes: the point is an eigenvalue of the perturbed operator."""


class Localized(RankOneError):
    """No absolutely continuous mass is left to perturb."""


class ConvergenceWarning(UserWarning):
    """An iterative construction stopped before reaching its tolerance."""
