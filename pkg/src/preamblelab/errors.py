"""Exception hierarchy shared by every stage of the simulator."""


class PreambleLabError(Exception):
    """Base class for all errors raised by this package."""


# seq
class NonPrimitivePolynomial(PreambleLabError):
    pass


class ZeroState(PreambleLabError):
    pass


class NonCoprimeStep(PreambleLabError):
    pass


class NotClosable(PreambleLabError):
    pass


# txgen
class BadLength(PreambleLabError, ValueError):
    pass


class BadSignaling(PreambleLabError, ValueError):
    pass


class EmptySignal(PreambleLabError, ValueError):
    pass


class ZeroSignal(PreambleLabError, ValueError):
    pass


# chan
class UnknownProfile(PreambleLabError, KeyError):
    def __str__(self) -> str:
        # KeyError quotes its argument; keep the message readable
        return str(self.args[0]) if self.args else "unknown profile"


class ProfileError(PreambleLabError, ValueError):
    pass


# rx
class NoPeak(PreambleLabError):
    pass


class OutOfBounds(PreambleLabError, IndexError):
    pass


# est
class ZeroPilot(PreambleLabError, ZeroDivisionError):
    pass


class NoPaths(PreambleLabError):
    pass


# theory
class QuadratureFailure(PreambleLabError, ArithmeticError):
    pass


# harness / cli
class ConfigError(PreambleLabError, ValueError):
    """Invalid experiment configuration.

    ``line`` is the 1-based line of the offending key in the source file,
    when the configuration came from a file.
    """

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
