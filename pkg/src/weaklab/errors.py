"""Exception hierarchy shared by all modules."""


class WeakLabError(Exception):
    pass


class InputError(WeakLabError, ValueError):
    """An operation was called outside its precondition."""


class ConfigError(WeakLabError):
    """A scenario or declared profile is malformed or incomplete.

    ``field`` names the offending scenario path when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
