class RidepoolError(Exception):
    """Base class for all engine errors."""


class ValidationError(RidepoolError):
    """Input data or configuration is invalid."""


class MalformedRecord(ValidationError):
    def __init__(self, row_index, message):
        super().__init__(f"row {row_index}: {message}")
        self.row_index = row_index


class DanglingEdge(ValidationError):
    pass


class NonPositiveWeight(ValidationError):
    pass


class Disconnected(ValidationError):
    def __init__(self, pair):
        super().__init__(f"no path from node {pair[0]!r} to node {pair[1]!r}")
        self.pair = pair


class Unreachable(RidepoolError):
    pass


class NoNodesInBoundingBox(ValidationError):
    pass


class UnknownNode(ValidationError):
    pass


class DuplicateRequest(ValidationError):
    pass


class EmptyHistory(ValidationError):
    pass


class HorizonTooLong(ValidationError):
    pass


class ParamViolation(ValidationError):
    pass


class EmptyZoneSet(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class SolverFault(RidepoolError):
    """Internal fault raised by the assignment solver."""


class ModelInfeasible(SolverFault):
    pass


class BudgetExceededWithNoIncumbent(SolverFault):
    pass


class ConstraintViolationInSolution(SolverFault):
    pass
