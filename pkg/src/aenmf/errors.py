"""Exception hierarchy.

Every error raised on purpose by the package derives from ``AenmfError``; the
``category`` attribute is what the command line maps to an exit code.
"""


class AenmfError(Exception):
    category = "error"


class ContractError(AenmfError, ValueError):
    """An argument violates a documented precondition (shape, symmetry...)."""

    category = "contract"


class ParameterError(AenmfError, ValueError):
    """A tuning parameter is out of its admissible range."""

    category = "config"


class ConfigError(AenmfError, ValueError):
    category = "config"


class ParseError(AenmfError, ValueError):
    category = "parse"


class SolverError(AenmfError, ArithmeticError):
    category = "solver"
