import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from qmatrix import conf
from qmatrix import services as qm
from qmatrix.domain import DensityMatrix, HermitianOperator
from qmatrix.exceptions import DimensionError, DomainError, ValidationError

# Slack on interval bounds so that derived angles (pi/2 - psi - theta, ...) stay legal
ANGLE_SLACK = 1e-12


class StrategyKind(str, Enum):
    ROTATION = 'rotation'
    FINITE = 'finite'
    UNITARY = 'unitary'


class Ordering(str, Enum):
    """How the product of player operators is formed.

    STATIC multiplies in declared order, U_1 U_2 ... U_N, as in rho_f.
    DYNAMIC applies the players in succession, player 1 first: U_N ... U_1.
    """

    STATIC = 'static'
    DYNAMIC = 'dynamic'


@dataclass(frozen=True, eq=False)
class StrategySpace:
    kind: StrategyKind
    lo: float = 0.0
    hi: float = math.pi / 2
    members: tuple = field(default_factory=tuple)
    target: int = None
    tolerance: float = None

    def __post_init__(self):
        object.__setattr__(self, 'tolerance', conf.get('VALIDATION_TOL', self.tolerance))
        object.__setattr__(self, 'kind', StrategyKind(self.kind))
        if self.kind is StrategyKind.ROTATION:
            if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
                raise DomainError(f"rotation interval [{self.lo}, {self.hi}] is empty or not finite")
        if self.kind is StrategyKind.FINITE:
            if not self.members:
                raise ValidationError('finite strategy set', message='finite strategy set has no members')
            members = tuple(qm.as_matrix(m) for m in self.members)
            for member in members:
                qm.validate_unitary(member, self.tolerance)
            object.__setattr__(self, 'members', members)
        if self.target is not None and self.target < 0:
            raise DomainError(f"qubit target must be non-negative, got {self.target}")

    @classmethod
    def rotation(cls, lo=0.0, hi=math.pi / 2, target=None):
        return cls(StrategyKind.ROTATION, lo=lo, hi=hi, target=target)

    @classmethod
    def finite(cls, members, target=None, tolerance=None):
        return cls(StrategyKind.FINITE, members=tuple(members), target=target, tolerance=tolerance)

    @classmethod
    def unrestricted(cls, target=None, tolerance=None):
        return cls(StrategyKind.UNITARY, target=target, tolerance=tolerance)

    def contains_angle(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        return bool(np.all((theta >= self.lo - ANGLE_SLACK) & (theta <= self.hi + ANGLE_SLACK)))

    def operator(self, choice):
        """Resolve a profile entry (angle, member index or matrix) to a unitary."""
        if self.kind is StrategyKind.ROTATION:
            if np.ndim(choice) != 0:
                raise DomainError('rotation strategies take an angle')
            if not self.contains_angle(choice):
                raise DomainError(f"angle {float(choice):.12g} outside [{self.lo:.12g}, {self.hi:.12g}]")
            return qm.rotation(float(choice))
        if self.kind is StrategyKind.FINITE and isinstance(choice, (int, np.integer)):
            if not 0 <= choice < len(self.members):
                raise DomainError(f"strategy index {choice} outside 0..{len(self.members) - 1}")
            return self.members[choice]
        if np.ndim(choice) != 2:
            raise DomainError(f"{self.kind.value} strategies take a unitary matrix")
        matrix = qm.as_matrix(choice)
        qm.validate_unitary(matrix, self.tolerance)
        if self.kind is StrategyKind.FINITE:
            if not any(m.shape == matrix.shape and qm.max_norm(m - matrix) <= self.tolerance for m in self.members):
                raise DomainError('matrix is not a member of the finite strategy set')
        return matrix


@dataclass(frozen=True, eq=False)
class QuantumGame:
    """The triple (S, rho, P): strategy spaces, initial state, payoff operators."""

    initial_state: DensityMatrix
    players: tuple
    payoffs: tuple
    ordering: Ordering = Ordering.STATIC

    def __post_init__(self):
        object.__setattr__(self, 'players', tuple(self.players))
        object.__setattr__(self, 'payoffs', tuple(self.payoffs))
        object.__setattr__(self, 'ordering', Ordering(self.ordering))
        if not isinstance(self.initial_state, DensityMatrix):
            raise ValidationError('density matrix', message='initial state must be a validated DensityMatrix')
        if not self.players or len(self.players) != len(self.payoffs):
            raise DimensionError(
                f"need one payoff operator per player, got {len(self.players)} player(s) "
                f"and {len(self.payoffs)} payoff(s)"
            )
        for index, payoff in enumerate(self.payoffs, start=1):
            if not isinstance(payoff, HermitianOperator):
                raise ValidationError('hermitian', message=f"payoff {index} must be a validated HermitianOperator")
            if payoff.dimension != self.dimension:
                raise DimensionError(
                    f"payoff {index} has dimension {payoff.dimension}, game has {self.dimension}"
                )
        if any(space.target is not None for space in self.players):
            n_qubits = qm.qubit_count(self.dimension)
            for index, space in enumerate(self.players, start=1):
                if space.target is None or space.target >= n_qubits:
                    raise DomainError(
                        f"player {index} needs a qubit target in 0..{n_qubits - 1} for a local game"
                    )

    @property
    def dimension(self):
        return self.initial_state.dimension

    @property
    def n_players(self):
        return len(self.players)

    @property
    def is_local(self):
        return any(space.target is not None for space in self.players)

    @property
    def is_rotation_game(self):
        return all(space.kind is StrategyKind.ROTATION for space in self.players)

    def player_index(self, player):
        """Zero-based index of 1-based ``player``."""
        if not 1 <= player <= self.n_players:
            raise DomainError(f"player {player} outside 1..{self.n_players}")
        return player - 1


@dataclass(frozen=True, eq=False)
class StrategyProfile:
    """One choice per player: an angle, a member index, or a unitary matrix."""

    choices: tuple

    def __post_init__(self):
        object.__setattr__(self, 'choices', tuple(self.choices))

    @classmethod
    def of(cls, *choices):
        return cls(tuple(choices))

    def __len__(self):
        return len(self.choices)


@dataclass(frozen=True)
class NonTrivialityReport:
    payoff_commutator: float
    strategy_commutators: tuple
    tolerance: float

    @property
    def trivial_payoffs(self):
        return self.payoff_commutator <= self.tolerance

    @property
    def trivial_players(self):
        """Payoff operators (1-based) commuting with every sampled strategy."""
        return tuple(
            index for index, norm in enumerate(self.strategy_commutators, start=1)
            if norm <= self.tolerance
        )

    @property
    def trivial(self):
        return self.trivial_payoffs or bool(self.trivial_players)
