"""Shared exception types."""


class NeedsLargerN(RuntimeError):
    """The construction requires a finer partition for this function.

    Raised where a size threshold that exists for all large n has not kicked
    in yet; carries which check failed so callers can report the doubling
    trace.
    """

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class HypothesisViolation(RuntimeError):
    """A lemma-level precondition failed a grid check."""

    def __init__(self, which: str, argmax: float, excess: float):
        super().__init__(f"hypothesis {which} violated at x={argmax:.6g} (excess {excess:.3g})")
        self.which = which
        self.argmax = argmax
        self.excess = excess


class CalibrationFailed(RuntimeError):
    pass
