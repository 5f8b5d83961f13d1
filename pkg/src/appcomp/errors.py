"""Exception hierarchy shared by all modules."""


class CompilerError(Exception):
    """Base class for every error raised by appcomp."""


class ParseError(CompilerError):
    pass


class ValidationError(CompilerError):
    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class MissingSymbol(CompilerError):
    pass


class UnboundSymbol(CompilerError):
    pass


class TooLarge(CompilerError):
    pass


class UnknownDevice(ValidationError):
    pass


class UnsupportedGate(CompilerError):
    pass


class TooManyQubits(CompilerError):
    pass


class DisconnectedDevice(CompilerError):
    pass


class NotExecutable(CompilerError):
    pass


class DimensionMismatch(CompilerError):
    pass


class GridTooLarge(CompilerError):
    pass


class BadSigma(CompilerError):
    pass


class BadDimension(CompilerError):
    pass


class BadPopulation(CompilerError):
    pass


class WrongPopulationSize(CompilerError):
    pass


class NonFiniteFitness(CompilerError):
    pass


class IllegalAction(CompilerError):
    pass


class NotTerminal(CompilerError):
    pass


class NoTerminalFound(CompilerError):
    pass
