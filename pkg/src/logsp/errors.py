class Condition32Violated(ValueError):
    """The amplitude fiber ``t -> I(t u)`` is increasing: no Nehari point on it."""


class NoInteriorMax(RuntimeError):
    """The scaled-fiber derivative has no sign change inside the search window."""


class FiberStructureError(RuntimeError):
    """A fiber derivative changed sign more than once (numerical defect)."""


class NonConvergence(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
