"""Exception hierarchy and process exit codes."""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_INFEASIBLE = 4


class ArrayLightError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidArgumentError(ArrayLightError, ValueError):
    """Bad value passed to a constructor or operation."""

    exit_code = EXIT_CONFIG


class ConfigError(ArrayLightError):
    """Malformed or inconsistent run configuration."""

    exit_code = EXIT_CONFIG


class NumericError(ArrayLightError):
    """Numerical failure (solver breakdown, ill-conditioned eigenbasis)."""

    exit_code = EXIT_NUMERIC


class EigenConditionError(NumericError):
    """Eigenvector matrix too ill-conditioned for the spectral propagator.

    Carries the measured condition number; the ODE propagator is the
    recommended fallback.
    """

    def __init__(self, cond, limit):
        self.cond = float(cond)
        self.limit = float(limit)
        super().__init__(
            f"eigenvector condition {cond:.3e} exceeds limit {limit:.3e}; "
            f"use the ODE propagator instead"
        )


class InfeasibleTargetError(ArrayLightError):
    """Target waveform needs envelope values f > 1.

    Carries the first time at which the constraint is violated.
    """

    exit_code = EXIT_INFEASIBLE

    def __init__(self, t_violation, f_squared):
        self.t_violation = float(t_violation)
        self.f_squared = float(f_squared)
        super().__init__(
            f"target infeasible: needs f^2 = {f_squared:.6g} > 1 "
            f"first at t = {t_violation:.6g}"
        )
