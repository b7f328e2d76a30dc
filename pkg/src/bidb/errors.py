"""Exception hierarchy. Each family maps to one CLI exit code."""


class BidbError(Exception):
    exit_code = 1


class ParseError(BidbError):
    """Malformed formula or command text.

    ``position`` is a 0-based character offset into ``text`` when known.
    """

    exit_code = 2

    def __init__(self, message, text=None, position=None):
        self.text = text
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class HorizonError(ParseError):
    """A time index or action sequence does not fit the signature's horizon."""


class CapacityError(BidbError):
    exit_code = 3


class InvariantError(BidbError):
    exit_code = 4


class PostulateFailure(BidbError):
    exit_code = 5
