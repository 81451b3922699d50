"""Exception types shared across the package."""


class StepchainError(Exception):
    """Base class for every package-specific error."""


# -- chain structure ---------------------------------------------------------


class UnknownStepError(StepchainError):
    def __init__(self, ordinal: int | None = None, message: str | None = None):
        self.ordinal = ordinal
        super().__init__(message or f"no step with ordinal {ordinal}")


class DuplicateOrdinalError(StepchainError):
    pass


class NonIncreasingOrdinalsError(StepchainError):
    pass


class EmptyStepTextError(StepchainError):
    pass


class EmptyReplacementTextError(StepchainError):
    pass


class MergeNonAdjacentError(StepchainError):
    def __init__(self, first: int, second: int):
        self.first = first
        self.second = second
        super().__init__(f"steps {first} and {second} are not adjacent")


class CyclicDependencyError(StepchainError):
    pass


class IllegalTransitionError(StepchainError):
    pass


# -- text protocol -----------------------------------------------------------


class NoStepsFoundError(StepchainError):
    pass


class PurposeStateMismatchError(StepchainError):
    pass


# -- model backends ----------------------------------------------------------


class BackendUnreachableError(StepchainError):
    pass


class BackendMalformedReplyError(StepchainError):
    pass


class ScriptMissError(StepchainError):
    def __init__(self, key: tuple):
        self.key = key
        super().__init__(f"no scripted reply for key {key!r}")


class FixtureSchemaError(StepchainError):
    pass


# -- adaptation --------------------------------------------------------------


class IdenticalTextsError(StepchainError):
    pass


# -- engine ------------------------------------------------------------------


class EmptyQueryError(StepchainError):
    pass


class NoStaleStepsError(StepchainError):
    pass


class StaleStepsRemainError(StepchainError):
    pass


class EmptyChainError(StepchainError):
    pass


class RegeneratedWrongStepsError(StepchainError):
    def __init__(self, expected: tuple[int, ...], got: tuple[int, ...]):
        self.expected = expected
        self.got = got
        super().__init__(f"expected steps {list(expected)}, reply contained {list(got)}")


# -- persistence / scenarios -------------------------------------------------


class StoreUnwritableError(StepchainError):
    pass


class TranscriptMismatchError(StepchainError):
    pass
