"""Exception types shared across the package."""


class MrgaError(Exception):
    pass


class ConfigurationError(MrgaError, ValueError):
    """Invalid dimensions, bounds or parameter values."""


class ContractViolation(MrgaError):
    """An operation was called on data that does not meet its precondition."""


class DegeneratePopulationError(MrgaError, ValueError):
    """The population is too small for the requested operation."""


class FormatError(MrgaError):
    """A population file or manifest is malformed."""


class TaskFailure(MrgaError):
    """A map task failed; carries the block index."""

    def __init__(self, block_index: int, cause: BaseException):
        super().__init__(f"map task for block {block_index} failed: {cause}")
        self.block_index = block_index
        self.cause = cause
