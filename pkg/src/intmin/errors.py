"""Exception hierarchy shared across the library."""


class IntminError(Exception):
    """Base class for all library errors."""


class PotentialValidationError(IntminError, ValueError):
    """A potential specification violates an admissibility condition."""


class ConfigurationError(IntminError, ValueError):
    """A run configuration (CLI flags or JSON file) is malformed."""


class ComputationError(IntminError, RuntimeError):
    """A numerical pipeline could not produce a result."""


class NoInstabilityWitnessError(ComputationError):
    """The ball-energy scan found no measure below the stability level."""


class CoincidentSingularPairError(ComputationError):
    """Two distinct particles coincide where the force is singular."""

    def __init__(self, i: int, j: int):
        self.pair = (i, j)
        super().__init__(
            f"particles {i} and {j} coincide at a singularity of the force"
        )


class FlowStepUnderflowError(ComputationError):
    """Adaptive time-step halving shrank the step below 1e-15."""


class QuadratureError(ComputationError):
    """An adaptive quadrature failed to converge to tolerance."""


class InitialisationError(ComputationError):
    """Could not draw a starting configuration with finite energy."""
