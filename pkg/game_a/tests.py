import math

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st
from numpy.testing import assert_allclose

from qmatrix.exceptions import DegenerateGameError, DomainError

from . import services
from .domain import GameAParams, NashSolution, SolutionKind

HALF_PI = math.pi / 2
_phases = st.floats(min_value=-HALF_PI, max_value=HALF_PI, allow_nan=False)

# (psi1, psi2) samplers for the six regions of the case table
REGIONS = {
    1: lambda rng: sorted(rng.uniform(-HALF_PI, 0.0, 2), reverse=True),
    2: lambda rng: sorted(rng.uniform(-HALF_PI, 0.0, 2)),
    3: lambda rng: (rng.uniform(-HALF_PI, 0.0), rng.uniform(0.0, HALF_PI)),
    4: lambda rng: (rng.uniform(0.0, HALF_PI), rng.uniform(-HALF_PI, 0.0)),
    5: lambda rng: sorted(rng.uniform(0.0, HALF_PI, 2), reverse=True),
    6: lambda rng: sorted(rng.uniform(0.0, HALF_PI, 2)),
}


def params(psi1, psi2, **kwargs):
    return GameAParams.from_phases(psi1, psi2, **kwargs)


def random_params(rng):
    psi1, psi2 = rng.uniform(-HALF_PI, HALF_PI, 2)
    q1, q2 = rng.uniform(0.1, 3.0, 2)
    return GameAParams(p1=rng.normal(), q1=q1, psi1=psi1, p2=rng.normal(), q2=q2, psi2=psi2)


class GameAParamsTests(SimpleTestCase):

    def test_negative_amplitude_rejected(self):
        with self.assertRaises(DomainError):
            params(0.0, 0.0, q1=-0.1)

    def test_phase_outside_band_rejected(self):
        with self.assertRaises(DomainError):
            params(2.0, 0.0)

    def test_rounding_slack_is_folded_back(self):
        self.assertEqual(params(HALF_PI + 1e-14, 0.0).psi1, HALF_PI)

    def test_degenerate_flags(self):
        game = params(0.0, 0.0, q1=0.0, q2=1e-13)
        self.assertEqual(game.degenerate_players, frozenset({1, 2}))
        self.assertFalse(params(0.0, 0.0).degenerate_players)


class EvaluateTests(SimpleTestCase):

    def test_peak_at_quarter_angles(self):
        self.assertAlmostEqual(services.evaluate(params(0.0, 0.0), math.pi / 4, math.pi / 4, 1), 1.0)

    def test_offset_is_added(self):
        game = GameAParams(p1=2.0, q1=1.0, psi1=HALF_PI, p2=0.0, q2=1.0, psi2=0.0)
        self.assertAlmostEqual(services.evaluate(game, 0.0, 0.0, 1), 3.0)

    def test_negative_phase_cancels(self):
        value = services.evaluate(params(-math.pi / 4, 0.0), math.pi / 8, math.pi / 8, 1)
        self.assertAlmostEqual(value, 0.0, delta=1e-15)

    def test_broadcasts_over_arrays(self):
        thetas = np.linspace(0.0, HALF_PI, 5)
        values = services.evaluate(params(0.0, 0.3), thetas, 0.1, 2)
        assert_allclose(values, np.sin(thetas + 0.4))

    def test_angle_out_of_domain(self):
        with self.assertRaises(DomainError):
            services.evaluate(params(0.0, 0.0), 2.0, 0.0, 1)
        with self.assertRaises(DomainError):
            services.evaluate(params(0.0, 0.0), 0.0, -0.1, 2)

    def test_unknown_player(self):
        with self.assertRaises(DomainError):
            services.evaluate(params(0.0, 0.0), 0.0, 0.0, 3)


class BestResponseTests(SimpleTestCase):

    def test_lowest_phase_saturates_at_right_end(self):
        self.assertAlmostEqual(services.best_response_p1(params(-HALF_PI, 0.0), 0.0), HALF_PI)

    def test_zero_phase_from_zero(self):
        self.assertAlmostEqual(services.best_response_p1(params(0.0, 0.0), 0.0), HALF_PI)

    def test_highest_phase_saturates_at_left_end(self):
        self.assertEqual(services.best_response_p1(params(HALF_PI, 0.0), HALF_PI), 0.0)

    def test_player_two_mirrors_player_one(self):
        game = params(0.3, 0.3)
        self.assertEqual(services.best_response_p2(game, 0.4), services.best_response_p1(game, 0.4))

    def test_degenerate_player_is_signalled(self):
        game = params(0.0, 0.0, q1=0.0)
        with self.assertRaises(DegenerateGameError) as raised:
            services.best_response_p1(game, 0.0)
        self.assertEqual(raised.exception.players, (1,))
        self.assertAlmostEqual(services.best_response_p2(game, 0.0), HALF_PI)

    def test_map_fixed_point_with_zero_phases(self):
        result = services.best_response_map(params(0.0, 0.0), HALF_PI, 0.0)
        assert_allclose(result, (HALF_PI, 0.0), atol=1e-15)

    def test_map_at_case_three_equilibrium(self):
        result = services.best_response_map(params(-math.pi / 4, math.pi / 4), HALF_PI, 0.0)
        assert_allclose(result, (HALF_PI, 0.0), atol=1e-15)

    def test_best_response_beats_every_grid_point(self):
        rng = np.random.default_rng(settings.QUANTUM_GAMES['SEED'])
        grid = np.linspace(0.0, HALF_PI, 10_000)
        for _ in range(1000):
            game = random_params(rng)
            phi = rng.uniform(0.0, HALF_PI)
            best = services.evaluate(game, services.best_response_p1(game, phi), phi, 1)
            self.assertGreaterEqual(best + 1e-12, np.max(services.evaluate(game, grid, phi, 1)))


class ClosedFormSolverTests(SimpleTestCase):

    def setUp(self):
        self.solver = services.ClosedFormSolver()

    def test_case_three(self):
        solution = services.solve_closed_form(params(-math.pi / 4, math.pi / 4))
        self.assertIs(solution.kind, SolutionKind.UNIQUE)
        self.assertEqual(solution.case, 3)
        assert_allclose(solution.point, (HALF_PI, 0.0))

    def test_case_six(self):
        solution = services.solve_closed_form(params(math.pi / 6, math.pi / 3))
        self.assertEqual(solution.case, 6)
        assert_allclose(solution.point, (math.pi / 3, 0.0), atol=1e-15)

    def test_equal_negative_phases_give_a_continuum(self):
        solution = services.solve_closed_form(params(-math.pi / 4, -math.pi / 4))
        self.assertIs(solution.kind, SolutionKind.CONTINUUM)
        self.assertAlmostEqual(solution.angle_sum, 3 * math.pi / 4)
        self.assertAlmostEqual(solution.theta_lo, math.pi / 4)
        self.assertAlmostEqual(solution.theta_hi, HALF_PI)

    def test_continuum_intervals_across_the_band(self):
        for psi in (-HALF_PI, -math.pi / 4, 0.0, math.pi / 4, HALF_PI):
            game = params(psi, psi)
            solution = services.solve_closed_form(game)
            self.assertIs(solution.kind, SolutionKind.CONTINUUM)
            self.assertAlmostEqual(solution.theta_lo, max(0.0, -psi))
            self.assertAlmostEqual(solution.theta_hi, min(HALF_PI, HALF_PI - psi))
            for theta, phi in solution.points():
                self.assertAlmostEqual(theta + phi + psi, HALF_PI)
                self.assertTrue(0.0 <= phi <= HALF_PI + 1e-12)
                assert_allclose(services.best_response_map(game, theta, phi), (theta, phi), atol=1e-9)
            self.assertTrue(services.certify_solution(game, solution).certificate.passed)

    def test_phases_within_tolerance_count_as_equal(self):
        solution = services.solve_closed_form(params(0.2, 0.2 + 1e-10))
        self.assertIs(solution.kind, SolutionKind.CONTINUUM)
        solution = services.solve_closed_form(params(0.2, 0.2 + 1e-10), psi_equality_tol=1e-12)
        self.assertIs(solution.kind, SolutionKind.UNIQUE)

    def test_degenerate_player_is_an_outcome(self):
        solution = services.solve_closed_form(params(0.0, 0.3, q1=0.0))
        self.assertIs(solution.kind, SolutionKind.DEGENERATE)
        self.assertEqual(solution.degenerate_players, frozenset({1}))
        self.assertIn('player 1', solution.note)
        self.assertEqual(solution.points(), [])

    def test_boundary_cases_agree(self):
        expectations = {
            (0.0, 0.5): [3, 6],
            (0.5, 0.0): [4, 5],
            (0.0, -0.5): [1, 4],
            (-0.5, 0.0): [2, 3],
        }
        for (psi1, psi2), cases in expectations.items():
            self.assertEqual(self.solver.matching_cases(psi1, psi2), cases)
            points = [self.solver.cases[number][1](psi1, psi2) for number in cases]
            assert_allclose(points[0], points[1], atol=1e-15)
            self.assertEqual(self.solver.solve(params(psi1, psi2)).case, cases[-1])

    def test_every_region_is_certified(self):
        rng = np.random.default_rng(settings.QUANTUM_GAMES['SEED'])
        for case, sampler in REGIONS.items():
            for _ in range(10):
                psi1, psi2 = sampler(rng)
                game = GameAParams.from_phases(psi1, psi2, q1=rng.uniform(0.1, 3.0), q2=rng.uniform(0.1, 3.0))
                solution = services.certify_solution(game, services.solve_closed_form(game), epsilon=1e-6, grid_n=500)
                self.assertEqual(self.solver.matching_cases(psi1, psi2)[0], case)
                self.assertTrue(solution.certificate.passed, (case, psi1, psi2))
                self.assertLessEqual(solution.certificate.worst_gain, 1e-6)

    def test_unique_solutions_are_fixed_points(self):
        rng = np.random.default_rng(settings.QUANTUM_GAMES['SEED'])
        for _ in range(500):
            game = random_params(rng)
            solution = services.solve_closed_form(game)
            theta, phi = solution.point
            assert_allclose(services.best_response_map(game, theta, phi), (theta, phi), atol=1e-9)

    @hypothesis_settings(derandomize=True, max_examples=200, deadline=None)
    @given(_phases, _phases)
    def test_solution_points_stay_in_the_square(self, psi1, psi2):
        game = params(psi1, psi2)
        for theta, phi in services.solve_closed_form(game).points():
            self.assertTrue(0.0 <= theta <= HALF_PI and 0.0 <= phi <= HALF_PI)
            assert_allclose(services.best_response_map(game, theta, phi), (theta, phi), atol=1e-9)

    def test_at_most_one_player_reaches_the_ceiling(self):
        rng = np.random.default_rng(settings.QUANTUM_GAMES['SEED'])
        for _ in range(500):
            game = random_params(rng)
            if abs(game.psi1 - game.psi2) < 1e-3:
                continue
            summary = services.equilibrium_payoffs(game, services.solve_closed_form(game))
            self.assertTrue(summary['at_most_one_maximized'])

    def test_equilibrium_payoffs_for_case_six(self):
        game = params(math.pi / 6, math.pi / 3)
        summary = services.equilibrium_payoffs(game, services.solve_closed_form(game))
        self.assertEqual(summary['maximized'], (True, False))
        assert_allclose(summary['payoffs'], (1.0, math.sin(2 * math.pi / 3)))

    def test_scaled_solution_halves_angles(self):
        solution = NashSolution.unique(HALF_PI, 0.0, 6).scaled(2)
        self.assertEqual(solution.point, (math.pi / 4, 0.0))
        self.assertEqual(solution.scale, 2)
        continuum = NashSolution.continuum(0.0, 0.0, HALF_PI).scaled(2)
        self.assertAlmostEqual(continuum.angle_sum, math.pi / 4)


class IterationTests(SimpleTestCase):

    def test_case_three_converges_quickly(self):
        record = services.iterate_best_response(params(-math.pi / 4, math.pi / 4), (0.0, 0.0))
        self.assertTrue(record.converged)
        self.assertLessEqual(record.rounds, 3)
        assert_allclose(record.point, (HALF_PI, 0.0), atol=1e-12)
        self.assertTrue(record.certificate.passed)
        self.assertEqual(record.trajectory[0], (0.0, 0.0))

    def test_continuum_start_is_already_fixed(self):
        record = services.iterate_best_response(params(0.0, 0.0), (math.pi / 4, math.pi / 4))
        self.assertTrue(record.converged)
        self.assertEqual(record.rounds, 0)
        assert_allclose(record.point, (math.pi / 4, math.pi / 4))

    def test_start_at_unique_solution_needs_no_steps(self):
        game = params(math.pi / 6, math.pi / 3)
        record = services.iterate_best_response(game, services.solve_closed_form(game).point)
        self.assertTrue(record.converged)
        self.assertEqual(record.rounds, 0)
        self.assertFalse(record.cycled)

    def test_converged_limits_are_certified(self):
        rng = np.random.default_rng(settings.QUANTUM_GAMES['SEED'])
        for _ in range(50):
            game = random_params(rng)
            record = services.iterate_best_response(game, tuple(rng.uniform(0.0, HALF_PI, 2)))
            if record.converged:
                self.assertTrue(record.certificate.passed)

    def test_degenerate_player_is_rejected(self):
        with self.assertRaises(DegenerateGameError):
            services.iterate_best_response(params(0.0, 0.0, q2=0.0), (0.0, 0.0))

    def test_start_outside_domain(self):
        with self.assertRaises(DomainError):
            services.iterate_best_response(params(0.0, 0.0), (3.0, 0.0))
