"""Exception types carrying a short machine-readable tag."""


class SuitaLabError(Exception):
    exit_code = 3

    def __init__(self, tag: str, message: str = ""):
        self.tag = tag
        self.message = message or tag
        super().__init__(f"{tag}: {self.message}" if message else tag)

    def to_dict(self) -> dict:
        return {"error": self.tag, "message": self.message}


class DomainError(SuitaLabError, ValueError):
    """Invalid input: bad domain, point outside it, violated precondition."""

    exit_code = 2


class NumericalError(SuitaLabError, ArithmeticError):
    """A numerical route failed to converge or became singular."""

    exit_code = 3
