"""Definition files, report formatting, sweeps and invariant suites for the commands."""
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from scipy.stats import unitary_group

from game_a import services as game_a
from game_a.domain import GameAParams, SolutionKind
from game_engine import services as engine
from game_engine.domain import QuantumGame, StrategyProfile, StrategySpace
from oracle import services as oracle
from qmatrix import conf
from qmatrix import services as qm
from qmatrix.exceptions import (
    CostGuardError,
    DefinitionError,
    DegenerateGameError,
    DimensionError,
    DomainError,
    InadmissibleGameError,
    NonSinusoidalError,
    PayoffResidueError,
    QuantumGameError,
    ValidationError,
)
from reductions import services as reductions

from .domain import GameDefinition
from .serializers import GameDefinitionSerializer

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INADMISSIBLE = 3
EXIT_DEGENERATE = 4
EXIT_CERTIFICATE = 5

EXIT_CODES = {
    DefinitionError: EXIT_INVALID,
    ValidationError: EXIT_INVALID,
    DimensionError: EXIT_INVALID,
    DomainError: EXIT_INVALID,
    NonSinusoidalError: EXIT_INVALID,
    PayoffResidueError: EXIT_INVALID,
    CostGuardError: EXIT_INVALID,
    InadmissibleGameError: EXIT_INADMISSIBLE,
    DegenerateGameError: EXIT_DEGENERATE,
}

SWEEP_COLUMNS = ['theta', 'phi', 'f1', 'f2']


def exit_code_for(exc):
    for cls in type(exc).__mro__:
        if cls in EXIT_CODES:
            return EXIT_CODES[cls]
    return 1


def _flatten_errors(errors, prefix=''):
    if isinstance(errors, dict):
        for key, value in errors.items():
            yield from _flatten_errors(value, f"{prefix}{key}." if key != 'non_field_errors' else prefix)
    elif isinstance(errors, list):
        for index, value in enumerate(errors):
            if isinstance(value, (dict, list)):
                yield from _flatten_errors(value, f"{prefix}{index}.")
            else:
                yield f"{prefix.rstrip('.') or 'definition'}: {value}"
    else:
        yield f"{prefix.rstrip('.') or 'definition'}: {errors}"


def parse_definition(text):
    """Parse and validate a YAML (or JSON) definition document."""
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, 'problem_mark', None)
        problem = getattr(exc, 'problem', None) or str(exc)
        if mark is not None:
            raise DefinitionError(problem, line=mark.line + 1, column=mark.column + 1)
        raise DefinitionError(problem)
    if not isinstance(document, dict):
        raise DefinitionError('definition must be a mapping of keys to values')

    serializer = GameDefinitionSerializer(data=document)
    if not serializer.is_valid():
        messages = list(_flatten_errors(serializer.errors))
        logger.warning(f"Invalid definition: {'; '.join(messages)}")
        raise DefinitionError('; '.join(messages), errors=serializer.errors)
    return serializer.save()


def load_definition(path):
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as exc:
        raise DefinitionError(f"cannot read {path}: {exc.strerror or exc}")
    return parse_definition(text)


def serialize_definition(definition: GameDefinition):
    return yaml.safe_dump(definition.to_dict(), sort_keys=False, default_flow_style=None)


def format_angle(radians):
    return f"{radians:.12g} rad ({math.degrees(radians):.6g} deg)"


class DefinitionRunner:
    """Service for running one game definition through the engine, reducer and solver."""

    def __init__(self, definition: GameDefinition):
        self.definition = definition
        self.reducer = reductions.GameReducer(definition.tolerances)
        self._game = None

    @property
    def game(self):
        if self._game is None:
            d = self.definition
            if d.model == 'custom':
                self._game = d.build_custom_game(self.reducer.validation_tol)
            else:
                payoffs = [qm.validate_hermitian(P, self.reducer.validation_tol) for P in (d.P1, d.P2)]
                self._game = reductions.model_game(d.model, *payoffs, p=d.p)
        return self._game

    def evaluate(self, theta, phi):
        profile = StrategyProfile.of(theta, phi)
        return engine.GameEvaluator(self.game).payoffs(profile)

    def reduce(self):
        d = self.definition
        if d.model == 'custom':
            return self.reducer.reduce_game(self.game, model='custom')
        return self.reducer.reduce(d.model, d.P1, d.P2, p=d.p)

    def solve(self, verify=True, epsilon=None, grid_n=None):
        report = self.reduce()
        if verify:
            return report, reductions.solve_physical(report, epsilon=epsilon, grid_n=grid_n)
        if report.inadmissible_players:
            raise InadmissibleGameError(report.inadmissible_players)
        solution = game_a.solve_closed_form(report.params)
        if solution.kind is not SolutionKind.DEGENERATE:
            solution = solution.scaled(report.angle_scale)
        return report, solution

    def sweep(self, n=None):
        """Payoffs on an n x n grid over the strategy domain, theta-major."""
        n = conf.get('SWEEP_N', n)
        if n < 1:
            raise DomainError(f"sweep needs n >= 1, got {n}")
        if not self.game.is_rotation_game:
            raise DomainError('sweeps need both players to choose rotation angles')
        (lo1, hi1), (lo2, hi2) = ((space.lo, space.hi) for space in self.game.players)
        thetas, phis = np.meshgrid(np.linspace(lo1, hi1, n), np.linspace(lo2, hi2, n), indexing='ij')
        frame = pd.DataFrame({'theta': thetas.ravel(), 'phi': phis.ravel()})
        for player in (1, 2):
            frame[f'f{player}'] = np.ravel(engine.payoff_surface(self.game, thetas, phis, player))
        logger.info(f"Swept {self.definition.model} on a {n}x{n} grid")
        return frame[SWEEP_COLUMNS]


def sweep_csv(frame, out=None):
    """CSV text (out=None) or a UTF-8 file with LF line endings."""
    return frame.to_csv(out, index=False, float_format='%.12g', lineterminator='\n', encoding='utf-8')


def format_report(report):
    lines = [f"model: {report.model}"]
    if report.mixing is not None:
        lines.append(f"mixing p: {report.mixing:.12g}")
    lines.append(f"angle scale: {report.angle_scale:g} (GAME A angle = {report.angle_scale:g} x physical angle)")
    for player, sinusoid in enumerate(report.sinusoids, start=1):
        status = 'admissible' if sinusoid.admissible else 'NOT admissible'
        if sinusoid.is_degenerate():
            status += ', degenerate'
        lines.append(
            f"player {player}: f = {sinusoid.offset:.12g} + {sinusoid.sin_coeff:.12g} sin 2x "
            f"+ {sinusoid.cos_coeff:.12g} cos 2x  q = {sinusoid.amplitude:.12g}  "
            f"psi = {format_angle(sinusoid.phase)}  [{status}]"
        )
    for player, values in sorted(report.aggregates.items()):
        shown = ', '.join(f"{key} = {value:.12g}" for key, value in values.items())
        lines.append(f"player {player} coefficients: {shown}")
    if report.residuals:
        table = pd.DataFrame(
            [
                {
                    'player': r.player,
                    'coefficient': r.name,
                    'source': r.source,
                    'formula': r.formula,
                    'value': r.value,
                    'oracle': r.oracle,
                    'residual': r.residual,
                }
                for r in report.residuals
            ]
        )
        lines.append('formula residuals:')
        lines.append(table.to_string(index=False, float_format=lambda v: f"{v:.6g}"))
    if report.non_triviality is not None and report.non_triviality.trivial:
        lines.append(
            f"warning: trivial game (||[P1,P2]|| = {report.non_triviality.payoff_commutator:.3e}, "
            f"payoffs commuting with every strategy: {report.non_triviality.trivial_players})"
        )
    return '\n'.join(lines)


def format_solution(solution):
    lines = []
    if solution.kind is SolutionKind.UNIQUE:
        lines.append(f"unique equilibrium (case {solution.case})")
        lines.append(f"  theta = {format_angle(solution.theta)}")
        lines.append(f"  phi   = {format_angle(solution.phi)}")
    elif solution.kind is SolutionKind.CONTINUUM:
        lines.append('continuum of equilibria')
        lines.append(f"  theta + phi = {format_angle(solution.angle_sum)}")
        lines.append(f"  theta in [{format_angle(solution.theta_lo)}, {format_angle(solution.theta_hi)}]")
    else:
        lines.append(f"degenerate: {solution.note}")
    certificate = solution.certificate
    if certificate is not None:
        verdict = 'PASS' if certificate.passed else 'FAIL'
        gains = ', '.join(f"{gain:.3e}" for gain in certificate.max_unilateral_gain)
        lines.append(
            f"certificate: {verdict} (epsilon {certificate.epsilon:g}, grid {certificate.grid_n}, "
            f"max unilateral gain {gains})"
        )
        if certificate.effective_epsilon is not None:
            lines.append(f"  off-grid bound: epsilon_eff = {certificate.effective_epsilon:.3e}")
    return '\n'.join(lines)


def _random_hermitian(rng, dimension):
    g = rng.normal(size=(dimension, dimension)) + 1j * rng.normal(size=(dimension, dimension))
    return (g + g.conj().T) / 2


def _random_params(rng):
    psi1, psi2 = rng.uniform(-math.pi / 2, math.pi / 2, 2)
    q1, q2 = rng.uniform(0.1, 3.0, 2)
    return GameAParams(p1=rng.normal(), q1=q1, psi1=psi1, p2=rng.normal(), q2=q2, psi2=psi2)


class InvariantSuiteRunner:
    """Service for running the seeded invariant suites outside the test runner."""

    def __init__(self, seed=None):
        self.seed = conf.get('SEED', seed)
        self.suites = {
            'qmatrix': self.check_qmatrix,
            'game_engine': self.check_game_engine,
            'game_a': self.check_game_a,
            'reductions': self.check_reductions,
            'oracle': self.check_oracle,
        }

    def run(self, names=None):
        names = names or list(self.suites)
        results = []
        for name in names:
            suite = self.suites.get(name)
            if not suite:
                raise DomainError(f"No invariant suite named: {name}")
            results.append(self._run_suite(name, suite))
        return results

    def _run_suite(self, name, suite):
        result = {'suite': name, 'total': 0, 'failed': 0, 'issues': []}
        rng = np.random.default_rng(self.seed)
        try:
            for label, ok in suite(rng):
                result['total'] += 1
                if not ok:
                    result['failed'] += 1
                    result['issues'].append(label)
        except QuantumGameError as exc:
            logger.error(f"Suite {name} aborted: {exc}")
            result['failed'] += 1
            result['issues'].append(f"aborted: {exc}")
        logger.info(f"Suite {name}: {result['total'] - result['failed']}/{result['total']} passed")
        return result

    def check_qmatrix(self, rng):
        for index in range(50):
            dimension = (2, 4)[index % 2]
            g = rng.normal(size=(dimension, dimension)) + 1j * rng.normal(size=(dimension, dimension))
            rho = g @ g.conj().T
            rho /= np.trace(rho)
            u = unitary_group.rvs(dimension, random_state=rng)
            yield f"unitary sample {index} passes the unitarity check", qm.is_unitary(u)
            try:
                qm.validate_density(qm.conjugate(rho, u))
            except ValidationError:
                yield f"density {index} stays valid under conjugation", False
            else:
                yield f"density {index} stays valid under conjugation", True

    def check_game_engine(self, rng):
        for index in range(200):
            dimension = (2, 4)[index % 2]
            g = rng.normal(size=(dimension, dimension)) + 1j * rng.normal(size=(dimension, dimension))
            rho = g @ g.conj().T
            game = QuantumGame(
                initial_state=qm.validate_density(rho / np.trace(rho)),
                players=[StrategySpace.unrestricted(), StrategySpace.unrestricted()],
                payoffs=[qm.validate_hermitian(np.eye(dimension))] * 2,
            )
            profile = StrategyProfile.of(*(unitary_group.rvs(dimension, random_state=rng) for _ in range(2)))
            rho_f = engine.final_state(game, profile).matrix
            yield f"trace preserved for sample {index}", abs(np.trace(rho_f) - 1.0) <= 1e-12

        identity = np.eye(4)
        basis = engine.product_basis(engine.computational_basis(2), 2)
        for index in range(100):
            profile = StrategyProfile.of(*rng.uniform(0.0, math.pi / 4, 2))
            P, Q = _random_hermitian(rng, 4), _random_hermitian(rng, 4)
            alpha, beta = rng.normal(size=2)
            lhs = engine.payoff(reductions.two_qubit_game(alpha * P + beta * Q, identity), profile, 1)
            rhs = (
                alpha * engine.payoff(reductions.two_qubit_game(P, identity), profile, 1)
                + beta * engine.payoff(reductions.two_qubit_game(Q, identity), profile, 1)
            )
            yield f"payoff linear in P for sample {index}", abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))

            u1 = np.kron(unitary_group.rvs(2, random_state=rng), qm.IDENTITY_2)
            u2 = np.kron(qm.IDENTITY_2, unitary_group.rvs(2, random_state=rng))
            game = reductions.two_qubit_game(P, Q)
            yield (
                f"local operations commute for sample {index}",
                qm.max_norm(u1 @ u2 - u2 @ u1) <= 1e-12 and engine.ordering_sensitivity(game, profile) <= 1e-12,
            )

            coefficients = rng.normal(size=(2, 2))
            game = reductions.two_qubit_game(engine.projection_payoff(coefficients, basis).matrix, identity)
            expected = float(np.dot(coefficients.reshape(-1), engine.projection_probabilities(game, profile, basis)))
            yield (
                f"projection payoff matches probability sum for sample {index}",
                abs(engine.payoff(game, profile, 1) - expected) <= 1e-12,
            )

    def check_game_a(self, rng):
        grid = np.linspace(0.0, math.pi / 2, 10_000)
        for index in range(200):
            params = _random_params(rng)
            phi = rng.uniform(0.0, math.pi / 2)
            best = game_a.evaluate(params, game_a.best_response_p1(params, phi), phi, 1)
            yield f"best response optimal for sample {index}", best + 1e-12 >= np.max(game_a.evaluate(params, grid, phi, 1))
            solution = game_a.certify_solution(params, game_a.solve_closed_form(params), epsilon=1e-6, grid_n=500)
            yield f"solution certified for sample {index}", solution.certificate.passed
            for theta, phi in solution.points():
                mapped = game_a.best_response_map(params, theta, phi)
                yield (
                    f"solution is a fixed point for sample {index}",
                    max(abs(mapped[0] - theta), abs(mapped[1] - phi)) <= 1e-9,
                )

    def check_reductions(self, rng):
        grid = np.linspace(0.0, math.pi / 4, 50)
        thetas, phis = np.meshgrid(grid, grid, indexing='ij')
        sum_tol = conf.get('SUM_DEPENDENCE_TOL')
        offset_tol = conf.get('OFFSET_IDENTITY_TOL')
        reducer = reductions.GameReducer()
        models = [
            ('one_qubit_pure', 2, lambda index: ()),
            ('one_qubit_mixed', 2, lambda index: ((0.0, 0.25, 0.5)[index % 3],)),
            ('two_qubit_bell', 4, lambda index: ()),
        ]
        for model, dimension, extra in models:
            for index in range(100):
                args = extra(index)
                report, payoffs = self._admissible_report(reducer, model, rng, dimension, *args)
                for player, P in enumerate(payoffs, start=1):
                    scale = max(1.0, qm.max_norm(P))
                    engine_values = engine.payoff_surface(report.game, thetas, phis, player)
                    game_a_values = game_a.evaluate(report.params, 2 * thetas, 2 * phis, player)
                    yield (
                        f"{model} round trip for player {player} of sample {index}",
                        np.max(np.abs(game_a_values - engine_values)) <= 1e-9,
                    )
                    yield (
                        f"{model} sum dependence for player {player} of sample {index}",
                        reductions.sum_dependence(report.game, player, rng=rng) <= sum_tol * scale,
                    )
                    values = report.aggregates[player]
                    expected = values['offset'] if 'offset' in values else (values['a'] + values['d']) / 2
                    yield (
                        f"{model} offset identity for player {player} of sample {index}",
                        abs(report.sinusoids[player - 1].offset - expected) <= offset_tol * scale,
                    )
                if model == 'one_qubit_mixed' and args == (0.5,):
                    yield f"mixed p = 0.5 degenerate for sample {index}", report.degenerate_players == (1, 2)
                if model == 'one_qubit_mixed' and args == (0.0,):
                    excited = reducer.reduce_game(
                        reductions.one_qubit_game(qm.projector(qm.ket(1, 2)), *report.game.payoffs)
                    )
                    deviation = max(
                        abs(a - b)
                        for mixed, pure in zip(report.sinusoids, excited.sinusoids)
                        for a, b in zip(
                            (mixed.offset, mixed.sin_coeff, mixed.cos_coeff), (pure.offset, pure.sin_coeff, pure.cos_coeff)
                        )
                    )
                    yield f"mixed p = 0 matches the pure |1> state for sample {index}", deviation <= 1e-12

    @staticmethod
    def _admissible_report(reducer, model, rng, dimension, *args):
        """Reduce a random payoff pair, negating the payoff of each inadmissible player once."""
        payoffs = [_random_hermitian(rng, dimension) for _ in range(2)]
        report = reducer.reduce(model, *payoffs, *args)
        if report.inadmissible_players:
            payoffs = [-P if player in report.inadmissible_players else P for player, P in enumerate(payoffs, start=1)]
            report = reducer.reduce(model, *payoffs, *args)
        return report, payoffs

    def check_oracle(self, rng):
        xs = np.linspace(0.0, math.pi / 2, 200)
        for index in range(100):
            p, alpha, beta = rng.uniform(-5.0, 5.0, 3)
            fitted, _ = oracle.fit_sinusoid(xs, p + alpha * np.sin(2 * xs) + beta * np.cos(2 * xs))
            error = max(abs(fitted.offset - p), abs(fitted.sin_coeff - alpha), abs(fitted.cos_coeff - beta))
            yield f"fit recovers coefficients for sample {index}", error <= 1e-10

    def check_definition(self, definition):
        """Round trip, sum dependence and (when solvable) the certificate for one definition."""
        runner = DefinitionRunner(definition)
        result = {'suite': f"definition ({definition.model})", 'total': 0, 'failed': 0, 'issues': []}

        def record(label, ok):
            result['total'] += 1
            if not ok:
                result['failed'] += 1
                result['issues'].append(label)

        report = runner.reduce()
        grid = np.linspace(0.0, math.pi / 4, 50)
        thetas, phis = np.meshgrid(grid, grid, indexing='ij')
        rng = np.random.default_rng(self.seed)
        for player in (1, 2):
            engine_values = engine.payoff_surface(report.game, thetas, phis, player)
            deviation = np.max(np.abs(report.physical_payoff(thetas, phis, player) - engine_values))
            record(f"round trip for player {player}", deviation <= 1e-9)
            record(
                f"sum dependence for player {player}",
                reductions.sum_dependence(report.game, player, rng=rng) <= conf.get('SUM_DEPENDENCE_TOL') * max(1.0, qm.max_norm(report.game.payoffs[player - 1].matrix)),
            )
        if not report.inadmissible_players and not report.degenerate_players:
            solution = reductions.solve_physical(report)
            record('equilibrium certificate', solution.certificate.passed)
        logger.info(f"Definition check: {result['total'] - result['failed']}/{result['total']} passed")
        return result
