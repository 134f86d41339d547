"""Exception hierarchy.

Every domain failure carries a short machine-readable ``code`` so the CLI can
report it as JSON without string matching.
"""


class DomainError(ValueError):
    code = "DomainError"

    def __init__(self, message="", **context):
        super().__init__(message)
        self.context = context


class NonpositiveCoefficient(DomainError):
    code = "NonpositiveCoefficient"


class NonpositiveMass(DomainError):
    code = "NonpositiveMass"


class NotHyperbolic(DomainError):
    code = "NotHyperbolic"


class NeverHyperbolic(DomainError):
    code = "NeverHyperbolic"


class OutsideSupportViolation(DomainError):
    """Raised when a point that must lie outside the essential support does not."""
    code = "OutsideSupportViolation"


class Inconclusive(DomainError):
    code = "Inconclusive"


class DegenerateStart(DomainError):
    code = "DegenerateStart"


class NotClassified(DomainError):
    code = "NotClassified"


class DuplicatePoint(DomainError):
    code = "DuplicatePoint"


class DuplicateNode(DomainError):
    code = "DuplicateNode"


class ExactnessBudgetExceeded(DomainError):
    code = "ExactnessBudgetExceeded"
