"""Exception hierarchy shared by every app."""


class QuantumGameError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(QuantumGameError):
    """Shapes do not fit the requested operation."""


class ValidationError(QuantumGameError):
    """A quantum object violates one of its invariants."""

    def __init__(self, invariant, magnitude=None, message=None):
        self.invariant = invariant
        self.magnitude = magnitude
        if message is None:
            message = f"{invariant} violated"
            if magnitude is not None:
                message += f" (magnitude {magnitude:.3e})"
        super().__init__(message)


class DomainError(QuantumGameError):
    """An angle, probability or index lies outside its allowed range."""


class RankDeficientError(QuantumGameError):
    """A least-squares design matrix lost rank."""


class NonSinusoidalError(QuantumGameError):
    """A payoff is not of the form p + a sin 2x + b cos 2x."""

    def __init__(self, residual, message=None):
        self.residual = residual
        super().__init__(message or f"payoff is not sinusoidal in 2x (residual {residual:.3e})")


class PayoffResidueError(QuantumGameError):
    """Tr(P rho) carried an imaginary part above the threshold."""

    def __init__(self, residue, threshold):
        self.residue = residue
        self.threshold = threshold
        super().__init__(
            f"payoff has imaginary residue {residue:.3e} above {threshold:.1e}; "
            f"payoff operator is not Hermitian"
        )


class DegenerateGameError(QuantumGameError):
    """At least one player has a constant payoff (q = 0)."""

    def __init__(self, players, message=None):
        self.players = tuple(sorted(players))
        names = ', '.join(f"player {p}" for p in self.players)
        super().__init__(message or f"degenerate payoff for {names}: every strategy is a best response")


class InadmissibleGameError(QuantumGameError):
    """A reduction produced a phase outside [-pi/2, pi/2]."""

    def __init__(self, players, message=None):
        self.players = tuple(sorted(players))
        names = ', '.join(f"player {p}" for p in self.players)
        super().__init__(message or f"not an instance of GAME A for {names} (negative sin coefficient)")


class CostGuardError(QuantumGameError):
    """A brute-force request exceeds the configured grid limit."""


class DefinitionError(QuantumGameError):
    """A game definition file could not be parsed or validated."""

    def __init__(self, message, errors=None, line=None, column=None):
        self.errors = errors or {}
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)
