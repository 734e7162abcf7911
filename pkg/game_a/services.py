"""GAME A: f_i(theta, phi) = p_i + q_i sin(theta + phi + psi_i) on [0, pi/2]^2."""
import logging

import numpy as np

from game_engine.domain import ANGLE_SLACK
from oracle import services as oracle
from qmatrix import conf
from qmatrix.exceptions import DegenerateGameError, DomainError, QuantumGameError

from .domain import HALF_PI, GameAParams, IterationRecord, NashSolution, SolutionKind

logger = logging.getLogger(__name__)

CASE_AGREEMENT_TOL = 1e-12


def _check_domain(name, value):
    value = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(value)) or np.any(value < -ANGLE_SLACK) or np.any(value > HALF_PI + ANGLE_SLACK):
        raise DomainError(f"{name} must lie in [0, pi/2]")
    return value


def _scalar(value):
    return float(value) if np.ndim(value) == 0 else value


def evaluate(params: GameAParams, theta, phi, player):
    """p_i + q_i sin(theta + phi + psi_i); broadcasts over angle arrays."""
    if player not in (1, 2):
        raise DomainError(f"GAME A has players 1 and 2, got {player}")
    theta = _check_domain('theta', theta)
    phi = _check_domain('phi', phi)
    value = params.offset(player) + params.amplitude(player) * np.sin(theta + phi + params.phase(player))
    return _scalar(value)


def payoff_pair(params):
    """(f1, f2) callables in the shape the oracle expects."""
    return (
        lambda theta, phi: evaluate(params, theta, phi, 1),
        lambda theta, phi: evaluate(params, theta, phi, 2),
    )


def _require_active(params, players=(1, 2)):
    degenerate = [player for player in players if params.is_degenerate(player)]
    if degenerate:
        logger.warning(f"Best response undefined for degenerate player(s) {degenerate}")
        raise DegenerateGameError(degenerate)


def _clamp_response(other, psi):
    return min(max(HALF_PI - other - psi, 0.0), HALF_PI)


def best_response_p1(params, phi):
    """The unique maximizer chi(phi) = clamp(pi/2 - phi - psi1, 0, pi/2)."""
    _require_active(params, (1,))
    phi = float(_check_domain('phi', phi))
    return _clamp_response(phi, params.psi1)


def best_response_p2(params, theta):
    """The unique maximizer kappa(theta) = clamp(pi/2 - theta - psi2, 0, pi/2)."""
    _require_active(params, (2,))
    theta = float(_check_domain('theta', theta))
    return _clamp_response(theta, params.psi2)


def best_response_map(params, theta, phi):
    """Simultaneous map g(theta, phi) = (chi(phi), kappa(theta))."""
    return best_response_p1(params, phi), best_response_p2(params, theta)


def _nonpositive(psi):
    return psi <= 0.0


def _nonnegative(psi):
    return psi >= 0.0


class ClosedFormSolver:
    """Service for the closed-form Nash equilibrium of GAME A."""

    def __init__(self, psi_equality_tol=None):
        self.psi_equality_tol = conf.get('PSI_EQUALITY_TOL', psi_equality_tol)
        # case number -> (region test on (psi1, psi2), equilibrium point)
        self.cases = {
            1: (lambda a, b: _nonpositive(a) and _nonpositive(b) and a > b, lambda a, b: (-a, HALF_PI)),
            2: (lambda a, b: _nonpositive(a) and _nonpositive(b) and a < b, lambda a, b: (HALF_PI, -b)),
            3: (lambda a, b: _nonpositive(a) and _nonnegative(b), lambda a, b: (HALF_PI, 0.0)),
            4: (lambda a, b: _nonnegative(a) and _nonpositive(b), lambda a, b: (0.0, HALF_PI)),
            5: (lambda a, b: _nonnegative(a) and _nonnegative(b) and a > b, lambda a, b: (0.0, HALF_PI - b)),
            6: (lambda a, b: _nonnegative(a) and _nonnegative(b) and a < b, lambda a, b: (HALF_PI - a, 0.0)),
        }

    def solve(self, params: GameAParams) -> NashSolution:
        if params.degenerate_players:
            solution = self._degenerate(params)
        elif abs(params.psi1 - params.psi2) <= self.psi_equality_tol:
            solution = self._continuum(params)
        else:
            solution = self._unique(params)
        logger.info(f"GAME A solved: {self.describe(solution)}")
        return solution

    def matching_cases(self, psi1, psi2):
        return [number for number, (region, _) in self.cases.items() if region(psi1, psi2)]

    def _unique(self, params):
        psi1, psi2 = params.psi1, params.psi2
        matches = self.matching_cases(psi1, psi2)
        if not matches:
            raise QuantumGameError(f"no case covers psi = ({psi1:.12g}, {psi2:.12g})")
        points = {number: self.cases[number][1](psi1, psi2) for number in matches}
        chosen = matches[-1]
        for number in matches[:-1]:
            if not np.allclose(points[number], points[chosen], rtol=0.0, atol=CASE_AGREEMENT_TOL):
                logger.error(f"Cases {chosen} and {number} disagree at psi = ({psi1}, {psi2})")
                raise QuantumGameError(
                    f"cases {chosen} and {number} give different points {points[chosen]} and {points[number]}"
                )
        theta, phi = points[chosen]
        return NashSolution.unique(theta, phi, chosen)

    def _continuum(self, params):
        psi = (params.psi1 + params.psi2) / 2
        return NashSolution.continuum(psi, max(0.0, -psi), min(HALF_PI, HALF_PI - psi))

    def _degenerate(self, params):
        players = sorted(params.degenerate_players)
        if len(players) == 2:
            note = 'both payoffs are constant; every profile is an equilibrium'
        else:
            other = 2 if players[0] == 1 else 1
            note = (
                f"player {players[0]} has a constant payoff; the equilibria are the profiles "
                f"where player {other} best-responds"
            )
        logger.warning(f"Degenerate GAME A: {note}")
        return NashSolution.degenerate(players, note)

    @staticmethod
    def describe(solution):
        if solution.kind is SolutionKind.UNIQUE:
            return f"unique ({solution.theta:.12g}, {solution.phi:.12g}) by case {solution.case}"
        if solution.kind is SolutionKind.CONTINUUM:
            return (
                f"continuum theta + phi = {solution.angle_sum:.12g}, "
                f"theta in [{solution.theta_lo:.12g}, {solution.theta_hi:.12g}]"
            )
        return f"degenerate players {sorted(solution.degenerate_players)}: {solution.note}"


def solve_closed_form(params, psi_equality_tol=None):
    return ClosedFormSolver(psi_equality_tol).solve(params)


def certify_solution(params, solution, epsilon=None, grid_n=None, samples=11):
    """Attach an epsilon-Nash certificate; continuum segments are checked at ``samples`` points."""
    points = solution.points(samples)
    if not points:
        raise DegenerateGameError(solution.degenerate_players)
    # |df/dtheta| <= q in GAME A angles
    certificate = oracle.verify_points(
        payoff_pair(params), points, epsilon=epsilon, grid_n=grid_n, lipschitz=params.max_amplitude
    )
    if not certificate.passed:
        logger.error(
            f"Certificate failed at {certificate.checked_point}: gain {certificate.worst_gain:.3e} "
            f"> {certificate.epsilon:.1e}"
        )
    return solution.with_certificate(certificate)


def iterate_best_response(params, start, max_iter=None, tol=1e-12, window=None):
    """Alternating (Gauss-Seidel) best responses from ``start``.

    Player 1 responds to the current phi, then player 2 responds to the new
    theta. A revisit of any of the last ``window`` states ends the run as a
    cycle.
    """
    max_iter = conf.get('MAX_ITERATIONS', max_iter)
    window = conf.get('CYCLE_WINDOW', window)
    _require_active(params)
    theta, phi = (float(v) for v in start)
    _check_domain('start', (theta, phi))
    trajectory = [(theta, phi)]
    converged, cycle_length, rounds = False, 0, 0
    for _ in range(max_iter):
        theta_next = best_response_p1(params, phi)
        phi_next = best_response_p2(params, theta_next)
        if max(abs(theta_next - theta), abs(phi_next - phi)) <= tol:
            converged = True
            break
        rounds += 1
        theta, phi = theta_next, phi_next
        recent = trajectory[-window:]
        for back, (t, p) in enumerate(reversed(recent), start=1):
            if max(abs(theta - t), abs(phi - p)) <= tol:
                cycle_length = back
                break
        trajectory.append((theta, phi))
        if cycle_length:
            logger.warning(f"Best-response iteration cycled with period {cycle_length}")
            break

    certificate = None
    if converged:
        certificate = oracle.verify_nash(payoff_pair(params), (theta, phi))
        logger.info(f"Best-response iteration converged to ({theta:.12g}, {phi:.12g}) in {rounds} round(s)")
    elif not cycle_length:
        logger.warning(f"Best-response iteration did not converge in {max_iter} round(s)")
    return IterationRecord(
        trajectory=tuple(trajectory),
        converged=converged,
        point=(theta, phi),
        rounds=rounds,
        cycle_length=cycle_length,
        certificate=certificate,
    )


def equilibrium_payoffs(params, solution, tol=1e-9):
    """Payoffs at the equilibrium and which players reach their ceiling p_i + q_i."""
    points = solution.points()
    if not points:
        raise DegenerateGameError(solution.degenerate_players)
    theta, phi = points[0]
    payoffs = tuple(evaluate(params, theta, phi, player) for player in (1, 2))
    maximized = tuple(
        abs(value - (params.offset(player) + params.amplitude(player))) <= tol
        for player, value in zip((1, 2), payoffs)
    )
    return {
        'point': (theta, phi),
        'payoffs': payoffs,
        'maximized': maximized,
        'at_most_one_maximized': sum(maximized) <= 1,
    }
