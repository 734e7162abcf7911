import math
from dataclasses import dataclass, field

import numpy as np

from game_engine.domain import Ordering, QuantumGame, StrategyKind, StrategySpace
from qmatrix import services as qm
from qmatrix.serializers import matrix_to_literal

MODELS = ('one_qubit_pure', 'one_qubit_mixed', 'two_qubit_bell', 'custom')
MODEL_DIMENSIONS = {'one_qubit_pure': 2, 'one_qubit_mixed': 2, 'two_qubit_bell': 4}


@dataclass(frozen=True, eq=False)
class GameDefinition:
    """One game as read from a definition file; angles are never part of it."""

    model: str
    P1: np.ndarray
    P2: np.ndarray
    p: float = None
    seed: int = None
    tolerances: dict = field(default_factory=dict)
    dimension: int = None
    initial_state: np.ndarray = None
    players: tuple = field(default_factory=tuple)
    ordering: str = Ordering.STATIC.value

    def to_dict(self):
        """Canonical mapping; optional keys appear only when set."""
        data = {'model': self.model}
        if self.p is not None:
            data['p'] = float(self.p)
        data['P1'] = matrix_to_literal(self.P1)
        data['P2'] = matrix_to_literal(self.P2)
        if self.seed is not None:
            data['seed'] = int(self.seed)
        if self.tolerances:
            data['tolerances'] = {key: self.tolerances[key] for key in sorted(self.tolerances)}
        if self.model == 'custom':
            data['dimension'] = int(self.dimension)
            data['initial_state'] = matrix_to_literal(self.initial_state)
            data['players'] = [_player_to_dict(player) for player in self.players]
            data['ordering'] = self.ordering
        return data

    def __eq__(self, other):
        if not isinstance(other, GameDefinition):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def build_custom_game(self, tol=None):
        players = [_strategy_space(player, tol) for player in self.players]
        return QuantumGame(
            initial_state=qm.validate_density(self.initial_state, tol),
            players=players,
            payoffs=[qm.validate_hermitian(self.P1, tol), qm.validate_hermitian(self.P2, tol)],
            ordering=self.ordering,
        )


def _player_to_dict(player):
    data = {'kind': player['kind']}
    if player['kind'] == StrategyKind.ROTATION.value:
        data['lo'] = float(player.get('lo', 0.0))
        data['hi'] = float(player.get('hi', math.pi / 2))
    if player['kind'] == StrategyKind.FINITE.value:
        data['members'] = [matrix_to_literal(member) for member in player['members']]
    if player.get('target') is not None:
        data['target'] = int(player['target'])
    return data


def _strategy_space(player, tol=None):
    kind = StrategyKind(player['kind'])
    target = player.get('target')
    if kind is StrategyKind.ROTATION:
        return StrategySpace.rotation(player.get('lo', 0.0), player.get('hi', math.pi / 2), target)
    if kind is StrategyKind.FINITE:
        return StrategySpace.finite(player['members'], target, tol)
    return StrategySpace.unrestricted(target, tol)
