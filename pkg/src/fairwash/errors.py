"""Exception types raised across the package."""


class FairwashError(Exception):
    """Base class for all package errors."""


# dataspace
class SchemaError(FairwashError):
    pass


class MissingColumn(SchemaError):
    def __init__(self, column):
        super().__init__(f"column {column!r} missing from CSV header")
        self.column = column


class UnknownCategoricalValue(SchemaError):
    def __init__(self, row, column, value):
        super().__init__(f"row {row}: value {value!r} not admissible for column {column!r}")
        self.row = row
        self.column = column
        self.value = value


class UnparseableNumeric(SchemaError):
    def __init__(self, row, column, value):
        super().__init__(f"row {row}: cannot parse {value!r} in numeric column {column!r}")
        self.row = row
        self.column = column
        self.value = value


class ConstantNumericColumn(UserWarning):
    """Min-max scaling undefined; the column is emitted as all zeros."""


class EmptyPartition(FairwashError):
    pass


# metrics
class LengthMismatch(FairwashError, ValueError):
    pass


class SingleGroup(FairwashError, ValueError):
    pass


# models
class DegenerateTraining(FairwashError):
    pass


class AllCandidatesFailed(FairwashError):
    pass


class SchemaMismatch(FairwashError, ValueError):
    pass


class NonFiniteLoss(FairwashError, ArithmeticError):
    pass


class EmptyRuleSet(FairwashError):
    pass


class Infeasible(FairwashError):
    """No model of the family satisfies the requested constraint."""


class InfeasibleBound(Infeasible):
    pass


class ProvenanceViolation(FairwashError):
    pass


class DidNotConverge(UserWarning):
    """The reduction's duality gap stayed above tolerance; the result is still usable."""
