"""Exception types shared across the package."""


class VSElbowError(Exception):
    """Base class for all package errors."""


class DomainError(VSElbowError, ValueError):
    """An operating point lies outside a surface's valid domain."""

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class IllConditionedError(VSElbowError, ValueError):
    """The least-squares design matrix is rank deficient."""

    def __init__(self, message, condition):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class IntegrationFault(VSElbowError, RuntimeError):
    """The plant integration produced a non-finite state."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class ProtocolError(VSElbowError, RuntimeError):
    """A characterization protocol or scenario could not complete."""

    def __init__(self, protocol, message):
        super().__init__(f"{protocol}: {message}")
        self.protocol = protocol


class ConfigError(VSElbowError, ValueError):
    """A run configuration failed validation."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class PassiveOverload(VSElbowError, RuntimeError):
    """Reflected static load on a held worm drive exceeded its tooth-strength limit."""

    def __init__(self, motor, load, limit, t=None):
        when = "" if t is None else f" at t={t:.3f} s"
        super().__init__(
            f"motor {motor}: reflected load {load:.3f} Nm exceeds passive limit {limit:.3f} Nm{when}"
        )
        self.motor = motor
        self.load = load
        self.limit = limit
        self.t = t


class EmgFormatError(VSElbowError, ValueError):
    """An EMG envelope file could not be parsed."""

    def __init__(self, message, path="", line=None):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line
