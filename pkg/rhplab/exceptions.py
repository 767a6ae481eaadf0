from django.core.exceptions import ImproperlyConfigured


class LabError(Exception):
    """Base class for every error raised by the lab."""


class ParseError(LabError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UndeclaredVariable(ParseError):
    pass


class LiteralOutOfRange(ParseError):
    pass


class ForbiddenConstruct(ParseError):
    """An observer or sandbox node showed up where only Source syntax is allowed."""


class IllFormedTerm(LabError):
    pass


class EnumerationCapExceeded(LabError):
    def __init__(self, kind, size, cap):
        self.kind = kind
        self.size = size
        self.cap = cap
        super().__init__(f"enumerating {kind} would produce {size} items (cap is {cap})")


class UniverseMismatch(LabError):
    pass


class TraceError(LabError):
    pass


class GaloisError(LabError):
    pass


class BridgeError(LabError):
    pass


class ShapeMismatch(LabError):
    pass


class UnknownName(LabError):
    pass


class ConfigError(LabError, ImproperlyConfigured):
    pass
