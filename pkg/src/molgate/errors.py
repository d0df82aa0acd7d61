"""Exception types shared across the package."""


class MolgateError(Exception):
    """Base class for all molgate errors."""


class StructureError(MolgateError, ValueError):
    """An operator violates a required structure (hermiticity, unitarity,
    dimension compatibility)."""


class PropagationError(MolgateError, RuntimeError):
    """Time propagation failed (non-finite field sample, loss of unitarity
    beyond tolerance)."""


class ModelError(MolgateError, ValueError):
    """A model description is inconsistent (bad indices, non-unitary
    target, mismatched dimensions)."""


class ConfigError(MolgateError, ValueError):
    """A run configuration failed validation.

    ``problems`` lists one human-readable message per offending field.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
