class IsapError(Exception):
    """Base error. `exit_code` is what the CLI returns when this escapes a command."""

    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    def __str__(self) -> str:
        return self.detail


class ValidationFailure(IsapError):
    exit_code = 1


class ShapeMismatchError(ValidationFailure):
    pass


class DomainError(ValidationFailure):
    pass


class ConfigError(ValidationFailure):
    pass


class ArtifactError(ValidationFailure):
    pass


class UsageError(ValidationFailure):
    pass


class NumericalFailure(IsapError):
    exit_code = 2


class NonFiniteError(NumericalFailure):
    pass


class DivergenceError(NumericalFailure):
    pass
