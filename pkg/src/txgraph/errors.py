"""Exception hierarchy. The CLI maps InputError subclasses to exit code 2
and everything else to exit code 1."""


class TxGraphError(Exception):
    code = "ERROR"


class InputError(TxGraphError, ValueError):
    code = "INPUT"


class ParseError(InputError):
    code = "PARSE"

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class RegistryError(InputError):
    code = "REGISTRY"


class LabelsError(InputError):
    code = "LABELS"


class ContractViolation(TxGraphError, ValueError):
    code = "CONTRACT"


class NotApplicable(TxGraphError):
    code = "NOT_APPLICABLE"


class InsufficientPoints(TxGraphError, ValueError):
    code = "INSUFFICIENT_POINTS"


class AttributionError(TxGraphError):
    code = "ATTRIBUTION"


class DataError(TxGraphError):
    code = "DATA"
