"""Exception types shared across the package."""


class RegularizationRequiredError(ValueError):
    """A zero-probability residue makes the log-likelihood undefined.

    Carries the offending residue so callers can report it or decide to
    smooth the distribution and retry.
    """

    def __init__(self, residue: int):
        self.residue = residue
        super().__init__(
            f"distribution assigns zero mass to residue {residue}; "
            f"smooth it with regularize() before building log-likelihood blocks"
        )


class MissingSigmaError(ValueError):
    """A step-size policy needs singular-value estimates that were not supplied."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""
