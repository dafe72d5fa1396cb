"""Exception hierarchy.

Validation errors map to CLI exit code 2, resource errors to exit code 3.
"""


class ArtifactError(Exception):
    exit_code = 1


class ValidationError(ArtifactError):
    exit_code = 2


class ResourceError(ArtifactError):
    exit_code = 3


class ParseError(ValidationError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class ArityError(ValidationError):
    pass


class RangeError(ValidationError):
    pass


class UnknownSymbol(ValidationError):
    pass


class DuplicateExistential(ValidationError):
    pass


class SignatureMismatch(ValidationError):
    pass


class EmptyDomain(ValidationError):
    pass


class NotPrenex(ValidationError):
    pass


class UnboundVariable(ValidationError):
    pass


class PositiveEquality(ValidationError):
    pass


class NotMonotone(ValidationError):
    pass


class NotExtensional(ValidationError):
    pass


class NotSNP(ValidationError):
    pass


class BadParams(ValidationError):
    pass


class NonOrderSignature(ValidationError):
    pass


class VariableMismatch(ValidationError):
    pass


class SymbolClash(ValidationError):
    pass


class TrivialSentence(ValidationError):
    pass


class BudgetExceeded(ResourceError):
    pass


class CapExceeded(ResourceError):
    pass


class CnfBlowup(ResourceError):
    pass


class ProbeExhausted(ResourceError):
    pass


class OracleInconsistent(ArtifactError):
    pass
