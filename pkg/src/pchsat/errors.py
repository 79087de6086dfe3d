"""Exception hierarchy shared across the package."""


class PchSatError(Exception):
    """Base class for all pchsat errors."""


class FormulaSyntaxError(PchSatError):
    """Raised on malformed constraint text; carries source position."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = "%d:%d: %s" % (line, column, message)
        super().__init__(message)


class UndeclaredVariable(PchSatError):
    pass


class UndeclaredValue(PchSatError):
    pass


class ConflictingIntervention(PchSatError):
    """An intervention assigns two distinct values to the same variable."""


class FragmentMismatch(PchSatError):
    """A solver or certificate was applied outside its fragment."""


class SupportTooLarge(PchSatError):
    """The hidden-variable support exceeds the configured enumeration cap."""


class FunctionSpaceTooLarge(PchSatError):
    """The function-tuple space for an ordering exceeds the configured cap."""

    def __init__(self, message, cardinality=None):
        self.cardinality = cardinality
        super().__init__(message)


class ExactTooLarge(PchSatError):
    """Exact treewidth was requested on a graph above the size limit."""


class TooLarge(PchSatError):
    """A brute-force oracle was asked to enumerate beyond its cap."""


class LpTooLarge(PchSatError):
    """The linear program exceeds the configured variable-count cap."""


class NoCoveringBag(PchSatError):
    """Internal consistency failure: a term's variables fit in no bag."""


class CertificateFormatError(PchSatError):
    """A serialized certificate is structurally malformed."""
