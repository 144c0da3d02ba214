class PartitionError(Exception):

    def __init__(self, message):
        super().__init__(message)


class MeasureError(Exception):

    def __init__(self, message):
        super().__init__(message)


class StateSpaceTooLarge(Exception):

    def __init__(self, message, n=None, bell=None):
        super().__init__(message)
        self.n = n
        self.bell = bell


class MultipleClosedClasses(Exception):

    def __init__(self, message, classes=()):
        super().__init__(message)
        self.classes = list(classes)


class NumericalFailure(Exception):
    def __init__(self, message):
        super().__init__(message)


class ConfigError(Exception):
    def __init__(self, message):
        super().__init__(message)


class OutputError(Exception):
    def __init__(self, message):
        super().__init__(message)
