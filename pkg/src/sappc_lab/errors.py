"""Exception types shared across the simulation laboratory."""


class SappcLabError(Exception):
    """Base class for all package errors."""


class SingularJacobian(SappcLabError):
    """Attitude-error Jacobian is not invertible (scalar part ~ 0)."""


class NoJunctionRoot(SappcLabError):
    """The RPF junction equation has no sign change on (0, t2).

    Signals an infeasible parameter set (for example rho_einf >= g_inf,
    or an exponential branch that decays too slowly to meet a tangent
    parabola before t2).
    """


class BranchViolation(SappcLabError):
    """Argument of the tangent base transform is outside its open branch."""


class ConvergenceFailure(SappcLabError):
    """Iterative solver exhausted its budget without meeting tolerance."""


class DomainViolation(SappcLabError):
    """State left the definition domain of a traditional PPC transform.

    Deliberately surfaced, never masked: this is the singularity failure
    mode the benchmark controllers are built to exhibit.
    """


class NonFiniteState(SappcLabError):
    """Integration produced a non-finite state component (run blow-up)."""

    def __init__(self, message, last_valid_row=None):
        super().__init__(message)
        self.last_valid_row = last_valid_row


class IncompleteLog(SappcLabError):
    """Trajectory log does not cover the requested analysis window."""


class ParseError(SappcLabError):
    """Config file could not be parsed (carries location and message)."""


class ValidationError(SappcLabError):
    """Config value violates a parameter invariant (carries key and rule)."""

    def __init__(self, key, rule):
        super().__init__(f"{key}: {rule}")
        self.key = key
        self.rule = rule
