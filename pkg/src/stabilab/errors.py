"""Exception hierarchy shared by every stabilab module."""


class StabilabError(Exception):
    """Base class for all errors raised by this package."""


class InvalidTopology(StabilabError):
    pass


class InvalidInput(StabilabError):
    pass


class ContractViolation(StabilabError):
    """An activation names a (process, action) whose guard is false."""


class AmbiguityError(StabilabError):
    """A deterministic process has more than one enabled action."""


class ScriptStall(StabilabError):
    """A scripted schedule entry shares no process with the enabled set."""


class ResourceLimit(StabilabError):
    pass


class InvalidLasso(StabilabError):
    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index
