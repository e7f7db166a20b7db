"""Exception hierarchy. The CLI maps each class to an exit code."""


class DgcnError(Exception):
    """Base class for data and domain problems (exit code 2)."""


class ParseError(DgcnError, ValueError):
    """Malformed input file."""

    def __init__(self, msg, path=None, lineno=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if lineno is not None:
                where += f":{lineno}"
            where += ": "
        super().__init__(where + msg)
        self.path = path
        self.lineno = lineno


class BoundsError(DgcnError, IndexError):
    pass


class DomainError(DgcnError, ValueError):
    pass


class ShapeError(DgcnError, ValueError):
    pass


class ProtocolError(DgcnError):
    """The experimental protocol cannot be satisfied by the data (e.g. too few labels)."""


class TrainingError(DgcnError):
    pass


class InvariantError(RuntimeError):
    """Internal invariant violated; indicates a bug rather than bad input (exit code 3)."""
