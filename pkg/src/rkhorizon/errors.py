"""Exception types raised across the package."""


class RKError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(RKError, ValueError):
    pass


class AllZeroMatrix(RKError, ValueError):
    pass


class ZeroRow(RKError, ValueError):
    pass


class IndexOutOfRank(RKError, IndexError):
    pass


class InconsistentUnderlying(RKError, ValueError):
    pass


class NullSpaceViolation(RKError, ValueError):
    pass


class NoComplement(RKError, ValueError):
    pass


class EmptyTraceSet(RKError, ValueError):
    pass


class MismatchedCheckpoints(RKError, ValueError):
    pass


class WriteFailure(RKError, OSError):
    pass


class EmptyFile(RKError, ValueError):
    pass


class MalformedLine(RKError, ValueError):
    def __init__(self, line_no, text, reason=""):
        self.line_no = line_no
        self.text = text
        msg = f"line {line_no}: malformed entry {text!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class NonIncreasingIndex(RKError, ValueError):
    def __init__(self, line_no, text=""):
        self.line_no = line_no
        self.text = text
        super().__init__(f"line {line_no}: feature indices must be strictly increasing: {text!r}")


class DensificationLimit(RKError, ValueError):
    pass
