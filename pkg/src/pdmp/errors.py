"""Exception types raised by the simulation and estimation routines."""


class PdmpError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(PdmpError, ValueError):
    pass


class RateBoundViolation(PdmpError):
    """The jump intensity exceeded the dominating bound used for thinning.

    This means the configured ``rate_bound`` is not a valid upper bound for
    the model; the thinning law would be biased if we carried on.
    """

    def __init__(self, theta, nu, t, value, bound):
        self.theta = theta
        self.nu = nu
        self.t = t
        self.value = value
        self.bound = bound
        super().__init__(
            f"intensity {value!r} exceeds rate bound {bound!r} "
            f"at theta={theta}, nu={nu!r}, t={t!r}"
        )


class DegenerateWeight(PdmpError):
    """An auxiliary acceptance, rejection or kernel factor vanished."""


class DegenerateRate(PdmpError):
    """The jump intensity is zero at a state where it must be positive."""


class NumericalFailure(PdmpError):
    """A deterministic integration produced a non-finite state."""

    def __init__(self, message, t=None):
        self.t = t
        super().__init__(message if t is None else f"{message} (t={t!r})")


class PlanDegenerate(PdmpError):
    """The optimal multilevel plan has fewer than two levels."""


class ConfigError(PdmpError):
    pass
