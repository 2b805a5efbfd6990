"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    pass


class IllFormedMachine(ValueError):
    pass


class SpecError(IllFormedMachine):
    """A machine document failed schema or invariant checks.

    ``location`` is a dotted path into the document (``"gates.U_p"``).
    """

    def __init__(self, location, message):
        self.location = location
        self.message = message
        super().__init__(f"{location}: {message}")


class UnsupportedMachine(ValueError):
    pass


class NonTermination(ArithmeticError):
    pass


class ConstructionFailed(RuntimeError):
    def __init__(self, message, best_error=None):
        self.best_error = best_error
        super().__init__(message)
