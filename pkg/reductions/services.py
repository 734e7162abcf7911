"""Reduce qubit realizations to GAME A parameters.

Coefficients always come from the trace oracle (the engine). Closed-form
coefficient formulas are evaluated next to it and kept as residual records.
"""
import logging
import math

import numpy as np

from game_a import services as game_a
from game_a.domain import GameAParams, SolutionKind
from game_engine import services as engine
from game_engine.domain import Ordering
from oracle import services as oracle
from qmatrix import conf
from qmatrix import services as qm
from qmatrix.exceptions import (
    DimensionError,
    DomainError,
    InadmissibleGameError,
    NonSinusoidalError,
    ValidationError,
)

from .domain import FormulaResidual, ReductionReport, SinusoidalPayoff

logger = logging.getLogger(__name__)

QUARTER_PI = math.pi / 4
PHYSICAL_INTERVAL = (0.0, QUARTER_PI)
ANGLE_SCALE = 2.0


def pure_plus_state():
    """|psi> = (|0> + |1>)/sqrt(2)."""
    return qm.projector((qm.ket(0, 2) + qm.ket(1, 2)) / math.sqrt(2))


def mixed_state(p):
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"mixing probability {p} outside [0, 1]")
    return np.diag([p, 1.0 - p]).astype(np.complex128)


def bell_state():
    """(|01> + |10>)/sqrt(2)."""
    return qm.projector((qm.ket(1, 4) + qm.ket(2, 4)) / math.sqrt(2))


def spin_polarization_pair():
    """P1 = sigma_z and P2 = sigma_x, the polarization measurements of a spin."""
    return qm.validate_hermitian(qm.SIGMA_Z), qm.validate_hermitian(qm.SIGMA_X)


def one_qubit_game(initial_state, P1, P2):
    # single-qubit rotations commute, so the payoff depends on theta + phi only
    return engine.rotation_game(initial_state, (P1, P2), [PHYSICAL_INTERVAL] * 2, ordering=Ordering.DYNAMIC)


def two_qubit_game(P1, P2):
    return engine.rotation_game(
        bell_state(), (P1, P2), [PHYSICAL_INTERVAL] * 2, ordering=Ordering.STATIC, targets=[0, 1]
    )


def model_game(model, P1, P2, p=None):
    """Engine game of a named realization, without reducing it."""
    builders = {
        'one_qubit_pure': lambda: one_qubit_game(pure_plus_state(), P1, P2),
        'one_qubit_mixed': lambda: one_qubit_game(mixed_state(p), P1, P2),
        'two_qubit_bell': lambda: two_qubit_game(P1, P2),
    }
    builder = builders.get(model)
    if not builder:
        raise DomainError(f"No realization named: {model}")
    if model == 'one_qubit_mixed' and p is None:
        raise DomainError('the mixed model needs a mixing probability p')
    return builder()


def extract_sinusoid(payoff_fn, samples=None, tol=None):
    """Three-point extraction of p + a sin 2x + b cos 2x from a function of x in [0, pi/2].

    The result is checked against a least-squares fit on ``samples`` points;
    a residual above ``tol`` raises NonSinusoidalError.
    """
    samples = conf.get('FIT_SAMPLES', samples)
    tol = conf.get('SINUSOID_RESIDUAL_TOL', tol)
    f0, f_quarter, f_half = (float(payoff_fn(x)) for x in (0.0, QUARTER_PI, math.pi / 2))
    offset = (f0 + f_half) / 2
    sinusoid = SinusoidalPayoff(offset=offset, sin_coeff=f_quarter - offset, cos_coeff=f0 - offset)

    xs = np.linspace(0.0, math.pi / 2, samples)
    values = np.asarray(payoff_fn(xs), dtype=np.float64)
    fitted, fit_residual = oracle.fit_sinusoid(xs, values)
    residual = max(fit_residual, float(np.max(np.abs(sinusoid(xs) - values))))
    if residual > tol:
        logger.warning(f"Payoff is not sinusoidal in 2x: residual {residual:.3e} > {tol:.1e}")
        raise NonSinusoidalError(residual)
    logger.debug(f"Extracted {sinusoid}; least-squares fit {fitted}")
    return sinusoid


def sum_dependence(game, player, samples=100, rng=None):
    """Largest |f(theta, phi) - f(theta + d, phi - d)| over seeded admissible shifts d."""
    rng = rng or np.random.default_rng(conf.get('SEED'))
    (lo1, hi1), (lo2, hi2) = ((space.lo, space.hi) for space in game.players)
    theta = rng.uniform(lo1, hi1, samples)
    phi = rng.uniform(lo2, hi2, samples)
    shift_lo = np.maximum(lo1 - theta, phi - hi2)
    shift_hi = np.minimum(hi1 - theta, phi - lo2)
    shift = shift_lo + rng.uniform(0.0, 1.0, samples) * (shift_hi - shift_lo)
    surface = engine.payoff_surface
    before = surface(game, theta, phi, player)
    after = surface(game, np.clip(theta + shift, lo1, hi1), np.clip(phi - shift, lo2, hi2), player)
    return float(np.max(np.abs(before - after)))


def _one_qubit_entries(P):
    m = P.matrix
    return float(m[0, 0].real), float(m[1, 1].real), complex(m[0, 1])


def _two_qubit_aggregates(P):
    x = P.matrix
    re = np.real(x)
    diagonal = re[0, 0] + re[1, 1] + re[2, 2] + re[3, 3]
    return {
        'A': float(-re[0, 0] + re[1, 1] + re[2, 2] - re[3, 3] + 2 * re[1, 2] + 2 * re[0, 3]),
        'B': float(re[0, 1] + re[0, 2] + re[1, 3] + re[2, 3]),
        'B_prime': float(re[0, 1] + re[0, 2] - re[1, 3] - re[2, 3]),
        'offset': float((diagonal + 2 * re[1, 2] - 2 * re[0, 3]) / 4),
    }


def _on_physical_interval(space, tol=1e-12):
    lo, hi = PHYSICAL_INTERVAL
    return math.isclose(space.lo, lo, abs_tol=tol) and math.isclose(space.hi, hi, abs_tol=tol)


def _printed_phase(numerator, denominator):
    if denominator == 0:
        return math.copysign(math.pi / 2, numerator) if numerator else 0.0
    return math.atan(numerator / denominator)


class GameReducer:
    """Service for turning qubit games into GAME A parameters."""

    def __init__(self, tolerances=None):
        tolerances = tolerances or {}
        self.validation_tol = conf.get('VALIDATION_TOL', tolerances.get('VALIDATION_TOL'))
        self.offset_tol = conf.get('OFFSET_IDENTITY_TOL', tolerances.get('OFFSET_IDENTITY_TOL'))
        self.sum_tol = conf.get('SUM_DEPENDENCE_TOL', tolerances.get('SUM_DEPENDENCE_TOL'))
        self.residual_tol = conf.get('SINUSOID_RESIDUAL_TOL', tolerances.get('SINUSOID_RESIDUAL_TOL'))
        self.degenerate_tol = conf.get('DEGENERATE_Q_TOL', tolerances.get('DEGENERATE_Q_TOL'))
        self.alpha_tol = conf.get('ADMISSIBLE_ALPHA_TOL', tolerances.get('ADMISSIBLE_ALPHA_TOL'))
        self.models = {
            'one_qubit_pure': self.reduce_one_qubit_pure,
            'one_qubit_mixed': self.reduce_one_qubit_mixed,
            'two_qubit_bell': self.reduce_two_qubit,
        }

    def reduce(self, model, P1, P2, p=None):
        reducer = self.models.get(model)
        if not reducer:
            raise DomainError(f"No reduction for model: {model}")
        if model == 'one_qubit_mixed':
            return reducer(P1, P2, p)
        return reducer(P1, P2)

    def _operators(self, P1, P2, dimension):
        operators = tuple(qm.validate_hermitian(P, self.validation_tol) for P in (P1, P2))
        for player, P in enumerate(operators, start=1):
            if P.dimension != dimension:
                raise DimensionError(f"P{player} must be {dimension}x{dimension}, got {P.matrix.shape}")
        return operators

    def reduce_one_qubit_pure(self, P1, P2):
        operators = self._operators(P1, P2, 2)
        game = one_qubit_game(pure_plus_state(), *operators)
        report = self.reduce_game(game, model='one_qubit_pure')
        residuals, aggregates = [], {}
        for player, (P, sinusoid) in enumerate(zip(operators, report.sinusoids), start=1):
            a, d, b = _one_qubit_entries(P)
            self._check_offset(player, sinusoid, (a + d) / 2, scale=qm.max_norm(P.matrix))
            q_printed = math.sqrt(((a - d) / 2) ** 2 + b.real ** 2)
            residuals += [
                FormulaResidual('offset', player, 'derived', '(a+d)/2', (a + d) / 2, sinusoid.offset),
                FormulaResidual('sin_coeff', player, 'derived', '(d-a)/2', (d - a) / 2, sinusoid.sin_coeff),
                FormulaResidual('sin_coeff', player, 'printed', '(a-d)/2', (a - d) / 2, sinusoid.sin_coeff),
                FormulaResidual('cos_coeff', player, 'derived', '(b+conj(b))/2', b.real, sinusoid.cos_coeff),
                FormulaResidual('q', player, 'printed', 'sqrt(((a-d)/2)^2 + Re(b)^2)', q_printed, sinusoid.amplitude),
                FormulaResidual(
                    'psi', player, 'printed', 'arctan((b+conj(b))/(a-d))',
                    _printed_phase(2 * b.real, a - d), sinusoid.phase,
                ),
            ]
            aggregates[player] = {'a': a, 'd': d, 'b': b}
        return self._with_diagnostics(report, residuals, aggregates)

    def reduce_one_qubit_mixed(self, P1, P2, p):
        if p is None:
            raise DomainError('the mixed model needs a mixing probability p')
        p = float(p)
        operators = self._operators(P1, P2, 2)
        game = one_qubit_game(mixed_state(p), *operators)
        report = self.reduce_game(game, model='one_qubit_mixed')
        residuals, aggregates = [], {}
        for player, (P, sinusoid) in enumerate(zip(operators, report.sinusoids), start=1):
            a, d, b = _one_qubit_entries(P)
            self._check_offset(player, sinusoid, (a + d) / 2, scale=qm.max_norm(P.matrix))
            contrast = 1 - 2 * p
            q_printed = 0.5 * math.sqrt((d - a) ** 2 * (1 - p) ** 2 + (2 * b.real) ** 2 * contrast ** 2)
            residuals += [
                FormulaResidual('offset', player, 'derived', '(a+d)/2', (a + d) / 2, sinusoid.offset),
                FormulaResidual(
                    'sin_coeff', player, 'derived', '-(1-2p)(b+conj(b))/2', -contrast * b.real, sinusoid.sin_coeff,
                ),
                FormulaResidual(
                    'sin_coeff', player, 'printed', '(1-2p)(b+conj(b))/2', contrast * b.real, sinusoid.sin_coeff,
                ),
                FormulaResidual(
                    'cos_coeff', player, 'derived', '(1-2p)(d-a)/2', contrast * (d - a) / 2, sinusoid.cos_coeff,
                ),
                FormulaResidual('cos_coeff', player, 'printed', '(1-p)(d-a)', (1 - p) * (d - a), sinusoid.cos_coeff),
                FormulaResidual(
                    'q', player, 'printed', '1/2 sqrt((d-a)^2 (1-p)^2 + (b+conj(b))^2 (1-2p)^2)',
                    q_printed, sinusoid.amplitude,
                ),
                FormulaResidual(
                    'psi', player, 'printed', 'arctan((1-p)(d-a) / ((1-2p)(b+conj(b))))',
                    _printed_phase((1 - p) * (d - a), contrast * 2 * b.real), sinusoid.phase,
                ),
            ]
            aggregates[player] = {'a': a, 'd': d, 'b': b}
        return self._with_diagnostics(report, residuals, aggregates, mixing=p)

    def reduce_two_qubit(self, P1, P2):
        operators = self._operators(P1, P2, 4)
        game = two_qubit_game(*operators)
        report = self.reduce_game(game, model='two_qubit_bell')
        residuals, aggregates = [], {}
        for player, (P, sinusoid) in enumerate(zip(operators, report.sinusoids), start=1):
            values = _two_qubit_aggregates(P)
            A, B, B_prime = values['A'], values['B'], values['B_prime']
            self._check_offset(player, sinusoid, values['offset'], scale=qm.max_norm(P.matrix))
            residuals += [
                FormulaResidual(
                    'offset', player, 'derived', '(sum x_jj + 2 Re x23 - 2 Re x14)/4', values['offset'], sinusoid.offset,
                ),
                FormulaResidual('cos_coeff', player, 'derived', 'A/4', A / 4, sinusoid.cos_coeff),
                FormulaResidual('sin_coeff', player, 'derived', "-B'/2", -B_prime / 2, sinusoid.sin_coeff),
                FormulaResidual('sin_coeff', player, 'printed', '-B/2', -B / 2, sinusoid.sin_coeff),
                FormulaResidual(
                    'q', player, 'printed', 'sqrt(A^2/4 + 4 B^2)', math.sqrt(A ** 2 / 4 + 4 * B ** 2), sinusoid.amplitude,
                ),
                FormulaResidual('psi', player, 'printed', '-arctan(A/B)', -_printed_phase(A, B), sinusoid.phase),
            ]
            aggregates[player] = values
        return self._with_diagnostics(report, residuals, aggregates)

    def reduce_game(self, game, model='custom'):
        """Reduce any two-player rotation game on [0, pi/4]^2 whose payoffs depend on theta + phi."""
        if game.n_players != 2 or not game.is_rotation_game:
            raise DomainError('only two-player rotation games reduce to GAME A')
        for player, space in enumerate(game.players, start=1):
            if not _on_physical_interval(space):
                raise DomainError(f"player {player} must rotate on [0, pi/4], got [{space.lo}, {space.hi}]")
        sinusoids = []
        for player in (1, 2):
            scale = max(1.0, qm.max_norm(game.payoffs[player - 1].matrix))
            deviation = sum_dependence(game, player)
            if deviation > self.sum_tol * scale:
                logger.error(f"{model}: payoff {player} depends on more than theta + phi ({deviation:.3e})")
                raise ValidationError('sum dependence', deviation)
            sinusoid = extract_sinusoid(
                lambda x, player=player: engine.payoff_surface(game, np.asarray(x) / 2, np.asarray(x) / 2, player),
                tol=self.residual_tol * scale,
            )
            # thresholds are relative to the payoff operator's size
            sinusoids.append(SinusoidalPayoff(
                sinusoid.offset, sinusoid.sin_coeff, sinusoid.cos_coeff,
                alpha_tol=self.alpha_tol * scale, degenerate_tol=self.degenerate_tol * scale,
            ))

        params = None
        if all(s.admissible for s in sinusoids):
            # degenerate players carry q = 0 so GameAParams flags them at any tolerance
            amplitudes = [0.0 if s.is_degenerate() else s.amplitude for s in sinusoids]
            params = GameAParams(
                p1=sinusoids[0].offset, q1=amplitudes[0], psi1=sinusoids[0].phase,
                p2=sinusoids[1].offset, q2=amplitudes[1], psi2=sinusoids[1].phase,
                degenerate_tol=self.degenerate_tol,
            )
        report = ReductionReport(
            model=model,
            game=game,
            sinusoids=tuple(sinusoids),
            params=params,
            angle_scale=ANGLE_SCALE,
            non_triviality=engine.non_triviality(game, np.linspace(*PHYSICAL_INTERVAL, 9)),
        )
        if report.inadmissible_players:
            logger.warning(f"{model}: not an instance of GAME A for player(s) {report.inadmissible_players}")
        logger.info(f"Reduced {model}: {[s.as_dict() for s in sinusoids]}")
        return report

    def _check_offset(self, player, sinusoid, expected, scale):
        deviation = abs(sinusoid.offset - expected)
        if deviation > self.offset_tol * max(1.0, scale):
            logger.error(f"Offset identity broken for player {player}: deviation {deviation:.3e}")
            raise ValidationError('offset identity', deviation)

    @staticmethod
    def _with_diagnostics(report, residuals, aggregates, mixing=None):
        flagged = [r for r in residuals if r.source == 'printed' and r.residual > 1e-9]
        for record in flagged:
            logger.info(
                f"{report.model}: printed {record.name} for player {record.player} "
                f"({record.formula}) is off by {record.residual:.3e}"
            )
        return ReductionReport(
            model=report.model,
            game=report.game,
            sinusoids=report.sinusoids,
            params=report.params,
            angle_scale=report.angle_scale,
            residuals=tuple(residuals),
            aggregates=aggregates,
            non_triviality=report.non_triviality,
            mixing=mixing,
        )


def reduce_one_qubit_pure(P1, P2):
    return GameReducer().reduce_one_qubit_pure(P1, P2)


def reduce_one_qubit_mixed(P1, P2, p):
    return GameReducer().reduce_one_qubit_mixed(P1, P2, p)


def reduce_two_qubit(P1, P2):
    return GameReducer().reduce_two_qubit(P1, P2)


def reduce_game(game):
    return GameReducer().reduce_game(game)


def solve_physical(report, epsilon=None, grid_n=None, samples=11):
    """Closed-form equilibrium in physical angles, certified against the engine payoff.

    A degenerate report yields the Degenerate outcome; an inadmissible one
    raises InadmissibleGameError.
    """
    if report.inadmissible_players:
        raise InadmissibleGameError(report.inadmissible_players)
    solution = game_a.solve_closed_form(report.params)
    if solution.kind is SolutionKind.DEGENERATE:
        return solution
    physical = solution.scaled(report.angle_scale)
    # d/dtheta of sin(2 theta + ...) doubles the amplitude
    certificate = oracle.verify_points(
        engine.payoff_functions(report.game),
        physical.points(samples),
        domain=(PHYSICAL_INTERVAL, PHYSICAL_INTERVAL),
        epsilon=epsilon,
        grid_n=grid_n,
        lipschitz=report.angle_scale * report.params.max_amplitude,
    )
    if not certificate.passed:
        logger.error(f"{report.model}: physical equilibrium failed its certificate ({certificate.worst_gain:.3e})")
    return physical.with_certificate(certificate)
