"""Exception hierarchy shared by all modules."""


class NPGraphError(Exception):
    """Base class for errors raised by npgraph."""


class InvalidArgument(NPGraphError, ValueError):
    pass


class DomainError(NPGraphError, ValueError):
    pass


class DegenerateBasisError(NPGraphError):
    pass


class PreconditionError(NPGraphError, ValueError):
    pass


class NumericalFailure(NPGraphError, ArithmeticError):
    pass


class OracleInfeasible(NPGraphError):
    pass


class InitializationError(NPGraphError):
    pass


class ConstraintSystemError(NPGraphError):
    pass


class SelectionError(NPGraphError):
    pass


class StateCorruption(NPGraphError):
    pass


class InfeasibleMLE(NPGraphError):
    pass


class ConvergenceError(NPGraphError):
    def __init__(self, message: str, grad_norm: float):
        super().__init__(f"{message} (gradient norm {grad_norm:.3e})")
        self.grad_norm = grad_norm


class ChainError(NPGraphError):
    """A Gibbs sweep failed; carries sweep, step and variable for diagnosis."""

    def __init__(self, sweep: int, step: str, variable: int | None, cause: Exception):
        where = f"sweep {sweep}, step {step}"
        if variable is not None:
            where += f", variable {variable}"
        super().__init__(f"chain aborted at {where}: {cause}")
        self.sweep = sweep
        self.step = step
        self.variable = variable
        self.cause = cause


class DataValidationError(NPGraphError, ValueError):
    pass
