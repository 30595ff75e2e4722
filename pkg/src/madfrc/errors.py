"""Exception types shared across the library."""


class ConfigError(ValueError):
    """Invalid system configuration or malformed config file."""


class DegenerateTargetError(RuntimeError):
    """A waveform puts zero probing energy on a target; filters/surrogates undefined."""


class InfeasibleScenarioError(RuntimeError):
    """No waveform satisfies the QoS constraints at the given power/PAPR budget."""

    def __init__(self, message, best_margin=None):
        super().__init__(message)
        self.best_margin = best_margin


class SolverError(RuntimeError):
    """Numerical solver failed to converge; carries the best iterate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
