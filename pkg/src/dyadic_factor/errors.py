"""Exception hierarchy.  Every error carries an optional ``diagnostics`` dict."""


class DyadicFactorError(Exception):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DyadicError(DyadicFactorError, ValueError):
    pass


class IndexOutOfRange(DyadicError):
    pass


class DepthMismatch(DyadicFactorError, ValueError):
    pass


class SupportTooLarge(DyadicFactorError):
    pass


class DepthTooSmall(DyadicFactorError):
    pass


class InsufficientCarlesonMass(DyadicFactorError):
    pass


class ConstructionExhausted(DyadicFactorError):
    pass


class ZeroBlock(DyadicFactorError):
    pass


class NormalizationViolated(DyadicFactorError):
    pass


class StageFailed(DyadicFactorError):
    def __init__(self, stage: int, message: str, diagnostics: dict | None = None):
        super().__init__(f"stage {stage}: {message}", diagnostics)
        self.stage = stage


class DepthExhausted(DyadicFactorError):
    pass


class RamseyMassInsufficient(DyadicFactorError):
    pass


class DiagonalDegenerate(DyadicFactorError):
    pass


class EmptyRamseyOutput(DyadicFactorError):
    pass


class OverrideExceedsCap(DyadicFactorError):
    pass


class MalformedInput(DyadicFactorError):
    pass
