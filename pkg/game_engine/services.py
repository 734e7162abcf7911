import logging
import math

import numpy as np

from qmatrix import conf
from qmatrix import services as qm
from qmatrix.exceptions import DimensionError, DomainError, PayoffResidueError, ValidationError

from .domain import Ordering, NonTrivialityReport, QuantumGame, StrategyKind, StrategyProfile, StrategySpace

logger = logging.getLogger(__name__)


class GameEvaluator:
    """Applies strategy profiles to a game and computes trace payoffs."""

    def __init__(self, game: QuantumGame, imag_tol=None):
        self.game = game
        self.imag_tol = conf.get('PAYOFF_IMAG_TOL', imag_tol)
        self.n_qubits = qm.qubit_count(game.dimension) if game.is_local else None

    def player_operators(self, profile: StrategyProfile):
        """Each player's operator, embedded on its qubit for local games."""
        if len(profile) != self.game.n_players:
            raise DimensionError(
                f"profile has {len(profile)} choice(s) for {self.game.n_players} player(s)"
            )
        operators = []
        for index, (space, choice) in enumerate(zip(self.game.players, profile.choices), start=1):
            try:
                operator = space.operator(choice)
            except (DomainError, ValidationError) as exc:
                logger.warning(f"Invalid strategy for player {index}: {exc}")
                raise
            operators.append(self._embed(space, operator))
        return operators

    def _embed(self, space, operator):
        if space.target is not None:
            return qm.embed_local(operator, space.target, self.n_qubits)
        if operator.shape[-2:] != (self.game.dimension, self.game.dimension):
            raise DimensionError(
                f"operator of shape {operator.shape[-2:]} does not act on dimension {self.game.dimension}"
            )
        return operator

    def total_operator(self, profile, ordering=None):
        ordering = Ordering(ordering or self.game.ordering)
        operators = self.player_operators(profile)
        if ordering is Ordering.DYNAMIC:
            operators = operators[::-1]
        total = np.eye(self.game.dimension, dtype=np.complex128)
        for operator in operators:
            total = total @ operator
        return total

    def final_state(self, profile, ordering=None):
        unitary = self.total_operator(profile, ordering)
        rho_f = qm.conjugate(self.game.initial_state.matrix, unitary)
        return qm.validate_density(rho_f, self.game.initial_state.tolerance)

    def payoff(self, profile, player):
        index = self.game.player_index(player)
        rho_f = self.final_state(profile).matrix
        return self._real_trace(self.game.payoffs[index].matrix, rho_f)

    def payoffs(self, profile):
        rho_f = self.final_state(profile).matrix
        return tuple(self._real_trace(p.matrix, rho_f) for p in self.game.payoffs)

    def _real_trace(self, operator, rho_f):
        value = np.einsum('ij,...ji->...', operator, rho_f)
        residue = float(np.max(np.abs(np.imag(value)))) if np.size(value) else 0.0
        if residue > self.imag_tol:
            logger.error(f"Payoff imaginary residue {residue:.3e} exceeds {self.imag_tol:.1e}")
            raise PayoffResidueError(residue, self.imag_tol)
        real = np.real(value)
        return float(real) if np.ndim(real) == 0 else real

    def payoff_batch(self, angles, player):
        """Payoffs for broadcast arrays of angles, one array per rotation player."""
        if not self.game.is_rotation_game:
            raise DomainError('batched payoffs need every player to use planar rotations')
        if len(angles) != self.game.n_players:
            raise DimensionError(f"need {self.game.n_players} angle array(s), got {len(angles)}")
        index = self.game.player_index(player)
        angles = np.broadcast_arrays(*[np.asarray(a, dtype=np.float64) for a in angles])
        for number, (space, values) in enumerate(zip(self.game.players, angles), start=1):
            if not space.contains_angle(values):
                raise DomainError(
                    f"player {number} angles leave [{space.lo:.12g}, {space.hi:.12g}]"
                )
        operators = [self._embed(space, qm.rotation_stack(values)) for space, values in zip(self.game.players, angles)]
        if self.game.ordering is Ordering.DYNAMIC:
            operators = operators[::-1]
        total = operators[0]
        for operator in operators[1:]:
            total = total @ operator
        rho_f = total @ self.game.initial_state.matrix @ np.conj(np.swapaxes(total, -1, -2))
        return self._real_trace(self.game.payoffs[index].matrix, rho_f)

    def ordering_sensitivity(self, profile):
        """Largest entrywise difference between static and dynamic final states."""
        static = self.final_state(profile, Ordering.STATIC).matrix
        dynamic = self.final_state(profile, Ordering.DYNAMIC).matrix
        return qm.max_norm(static - dynamic)


def final_state(game, profile):
    return GameEvaluator(game).final_state(profile)


def payoff(game, profile, player):
    return GameEvaluator(game).payoff(profile, player)


def payoff_surface(game, thetas, phis, player):
    """Two-player payoff on broadcast angle arrays."""
    return GameEvaluator(game).payoff_batch((thetas, phis), player)


def payoff_functions(game):
    """Vectorized (f1, f2) callables of (theta, phi) for a two-player rotation game."""
    evaluator = GameEvaluator(game)
    return tuple(
        (lambda theta, phi, player=player: evaluator.payoff_batch((theta, phi), player))
        for player in range(1, game.n_players + 1)
    )


def ordering_sensitivity(game, profile):
    return GameEvaluator(game).ordering_sensitivity(profile)


def computational_basis(dimension):
    return [qm.ket(index, dimension) for index in range(dimension)]


def product_basis(local_basis, n_factors):
    """Basis |s_j1 ... s_jN> in row-major multi-index order j1, ..., jN."""
    states = [np.ones(1, dtype=np.complex128)]
    for _ in range(n_factors):
        states = [np.kron(state, local) for state in states for local in local_basis]
    return states


def projection_payoff(coefficients, basis, tol=None):
    """P = sum_j C_j |s_j><s_j| for real coefficients over an orthonormal basis.

    ``coefficients`` may be a flat vector or a tensor indexed by the basis
    multi-index; it is flattened in row-major order.
    """
    tol = conf.get('VALIDATION_TOL', tol)
    coefficients = np.asarray(coefficients)
    if np.iscomplexobj(coefficients):
        if qm.max_norm(coefficients.imag) > tol:
            raise ValidationError('real coefficients', qm.max_norm(coefficients.imag))
        coefficients = coefficients.real
    coefficients = coefficients.astype(np.float64).reshape(-1)
    vectors = np.array([np.asarray(v, dtype=np.complex128).reshape(-1) for v in basis])
    if vectors.ndim != 2 or len(coefficients) != len(vectors):
        raise DimensionError(f"{len(coefficients)} coefficient(s) for {len(vectors)} basis state(s)")
    gram_deviation = qm.max_norm(vectors.conj() @ vectors.T - np.eye(len(vectors)))
    if gram_deviation > tol:
        raise ValidationError('orthonormal basis', gram_deviation)
    operator = np.einsum('j,ja,jb->ab', coefficients, vectors, vectors.conj())
    return qm.validate_hermitian(operator, tol)


def projection_probabilities(game, profile, basis):
    """|<s_j|E>|^2 for a pure initial state; the probability form of a projection payoff."""
    rho = game.initial_state.matrix
    values, vectors = np.linalg.eigh(rho)
    if abs(values[-1] - 1.0) > game.initial_state.tolerance:
        raise ValidationError('pure state', abs(values[-1] - 1.0))
    sigma = vectors[:, -1]
    final = GameEvaluator(game).total_operator(profile) @ sigma
    return np.array([abs(np.vdot(np.asarray(b, dtype=np.complex128), final)) ** 2 for b in basis])


def non_triviality(game, sample_angles, tol=None):
    """Commutator norms ||[P1, P2]|| and, per payoff, the largest ||[P_i, U_k(theta)]||.

    A payoff that commutes with every sampled strategy of every player is
    flagged; the largest norm is used because U(0) = I commutes with anything.
    """
    tol = conf.get('VALIDATION_TOL', tol)
    if game.n_players != 2:
        raise DimensionError('non-triviality is defined for two-player games')
    evaluator = GameEvaluator(game)
    p1, p2 = (payoff.matrix for payoff in game.payoffs)
    payoff_norm = qm.max_norm(qm.commutator(p1, p2))
    operators = []
    for space in game.players:
        if space.kind is StrategyKind.ROTATION:
            samples = [qm.rotation(float(theta)) for theta in sample_angles]
        elif space.kind is StrategyKind.FINITE:
            samples = list(space.members)
        else:
            continue
        operators.extend(evaluator._embed(space, u) for u in samples)
    strategy_norms = tuple(
        max((qm.max_norm(qm.commutator(payoff.matrix, u)) for u in operators), default=math.inf)
        for payoff in game.payoffs
    )
    report = NonTrivialityReport(payoff_norm, strategy_norms, tol)
    if report.trivial:
        logger.warning(
            f"Game is trivial: ||[P1,P2]|| = {payoff_norm:.3e}, strategy commutators {strategy_norms}"
        )
    return report


def rotation_game(initial_state, payoffs, intervals, ordering=Ordering.STATIC, targets=None, tol=None):
    """Build a game whose players all choose planar rotation angles."""
    targets = targets or [None] * len(intervals)
    players = [StrategySpace.rotation(lo, hi, target) for (lo, hi), target in zip(intervals, targets)]
    return QuantumGame(
        initial_state=qm.validate_density(initial_state, tol),
        players=players,
        payoffs=[qm.validate_hermitian(p, tol) for p in payoffs],
        ordering=ordering,
    )
