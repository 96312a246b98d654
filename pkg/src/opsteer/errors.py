"""Exception types shared across the library."""


class SteeringError(Exception):
    """Base class for all opsteer errors."""


class NegativeWeight(SteeringError):
    """Adjacency matrix contains a negative entry."""


class NotStronglyConnected(SteeringError):
    """Some ordered agent pair has no directed path between them."""


class SingularSystem(SteeringError):
    """The fixed-point system is numerically singular or its solution
    violates the mixing-matrix invariants (row stochasticity, nonnegativity,
    positive minimum singular value)."""


class InvalidRange(SteeringError):
    """Scenario generation parameters outside their validity bounds."""


class InadmissibleControl(SteeringError):
    """Some h_i * u_i falls outside [0, 1]; signals a controller bug."""


class StateOutOfBox(SteeringError):
    """A state left [0, 1]^n by more than the float-noise tolerance."""


class ZeroControl(SteeringError):
    """A strictly positive control was required but some h_i * u_i is 0."""


class AtTarget(SteeringError):
    """Excitation control requested while some component sits on the target."""


class GainTooLarge(SteeringError):
    """Adaptation gain violates psi < 2 / beta^2."""


class InvalidGain(SteeringError):
    """Contraction-rate arguments outside their valid ranges."""


class NumericFailure(SteeringError):
    """A numeric search (bisection, optimizer bracketing) failed."""


class StalledCycle(SteeringError):
    """Neither phase of the online loop advances; hyperparameters mis-tuned."""


class ConfigInvalid(SteeringError):
    """Experiment configuration failed validation; message names the field."""
