"""Exception hierarchy shared by the simulator modules."""


class WlanVoipError(Exception):
    pass


class MisuseError(WlanVoipError):
    """An API contract was violated by the caller (a programming error)."""


class StateMachineError(WlanVoipError):
    """A state machine received an input that is illegal in its current phase."""


class ConfigError(WlanVoipError):
    """A configuration value is outside its allowed range."""


class ScenarioError(ConfigError):
    """A scenario document failed validation.

    ``field`` is a dotted path into the document and ``line`` the 1-based
    source line when known.
    """

    def __init__(self, message, field=None, line=None):
        self.message = message
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(field)
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class CompareError(WlanVoipError):
    pass
