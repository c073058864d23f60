"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid user-supplied configuration (bounds, names, grid specs ...)."""


class DomainError(ValueError):
    """A point lies outside the domain an operation is defined on."""


class ContractError(ValueError):
    """Inputs are individually valid but inconsistent with each other."""


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
