class ConceptOrderingError(Exception):
    exit_code = 1


class UsageError(ConceptOrderingError):
    exit_code = 2


class ConfigError(UsageError, ValueError):
    pass


class DataError(ConceptOrderingError):
    exit_code = 3


class EmptyGraphError(DataError):
    pass


class EmptySeedError(DataError):
    pass


class EmptyCorpusError(DataError):
    pass


class SnapshotFormatError(DataError):
    pass


class ValidationError(DataError):

    def __init__(self, message, issues=()):
        super().__init__(message)
        self.issues = list(issues)


class AdapterError(DataError):

    def __init__(self, message, detected_fields=()):
        super().__init__(message)
        self.detected_fields = sorted(detected_fields)


class InvalidInputError(DataError, ValueError):
    pass


class InvalidPairError(InvalidInputError):
    pass


class InvalidOrderingError(InvalidInputError):
    pass


class InvalidSetError(InvalidInputError):
    pass


class SetTooLargeError(InvalidInputError):
    pass


class TransportError(ConceptOrderingError):
    exit_code = 4


class TransientTransportError(TransportError):
    pass


class EmptyGenerationError(TransportError):
    pass
