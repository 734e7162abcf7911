import math

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from game_a import services as game_a
from game_a.domain import SolutionKind
from game_engine import services as engine
from game_engine.domain import Ordering
from qmatrix import services as qm
from qmatrix.exceptions import DimensionError, DomainError, InadmissibleGameError, NonSinusoidalError, ValidationError
from qmatrix.services import IDENTITY_2, SIGMA_X, SIGMA_Z

from . import services
from .domain import SinusoidalPayoff

QUARTER_PI = math.pi / 4
HALF_PI = math.pi / 2


def random_hermitian(rng, dimension):
    g = rng.normal(size=(dimension, dimension)) + 1j * rng.normal(size=(dimension, dimension))
    return (g + g.conj().T) / 2


def coefficients(sinusoid):
    return [sinusoid.offset, sinusoid.sin_coeff, sinusoid.cos_coeff]


def residual(report, name, player, source):
    return next(
        r for r in report.residuals if (r.name, r.player, r.source) == (name, player, source)
    )


class SinusoidalPayoffTests(SimpleTestCase):

    def test_canonical_form(self):
        sinusoid = SinusoidalPayoff(offset=0.5, sin_coeff=0.6, cos_coeff=0.8)
        self.assertAlmostEqual(sinusoid.amplitude, 1.0)
        self.assertAlmostEqual(sinusoid.phase, math.atan2(0.8, 0.6))
        self.assertTrue(sinusoid.admissible)
        self.assertAlmostEqual(sinusoid(QUARTER_PI), 1.1)

    def test_negative_sin_coefficient_leaves_the_band(self):
        sinusoid = SinusoidalPayoff(offset=0.0, sin_coeff=-1.0, cos_coeff=0.1)
        self.assertFalse(sinusoid.admissible)
        self.assertGreater(abs(sinusoid.phase), HALF_PI)

    def test_rounding_noise_on_the_edge_stays_admissible(self):
        sinusoid = SinusoidalPayoff(offset=0.0, sin_coeff=-1e-15, cos_coeff=1e-14)
        self.assertTrue(sinusoid.admissible)
        self.assertLessEqual(abs(sinusoid.phase), HALF_PI)

    def test_degenerate_payoff_is_admissible_whatever_the_sign(self):
        sinusoid = SinusoidalPayoff(offset=1e6, sin_coeff=-1e-9, cos_coeff=0.0, degenerate_tol=1e-6)
        self.assertTrue(sinusoid.is_degenerate())
        self.assertTrue(sinusoid.admissible)
        self.assertFalse(SinusoidalPayoff(offset=1e6, sin_coeff=-1e-9, cos_coeff=0.0).admissible)

    def test_noise_level_cos_coefficient_gives_a_zero_phase(self):
        self.assertEqual(SinusoidalPayoff(offset=0.0, sin_coeff=1.0, cos_coeff=-1e-17).phase, 0.0)


class ExtractSinusoidTests(SimpleTestCase):

    def test_constant_function_is_degenerate(self):
        sinusoid = services.extract_sinusoid(lambda x: np.ones_like(np.asarray(x, dtype=float)))
        self.assertEqual(coefficients(sinusoid), [1.0, 0.0, 0.0])
        self.assertTrue(sinusoid.is_degenerate())

    def test_pure_model_coefficients(self):
        report = services.reduce_one_qubit_pure(SIGMA_X, SIGMA_Z)
        assert_allclose(coefficients(report.sinusoids[0]), [0, 0, 1], atol=1e-12)
        assert_allclose(coefficients(report.sinusoids[1]), [0, -1, 0], atol=1e-12)

    def test_higher_harmonic_is_rejected(self):
        with self.assertRaises(NonSinusoidalError) as raised:
            services.extract_sinusoid(lambda x: np.sin(4 * np.asarray(x)))
        self.assertGreater(raised.exception.residual, 1e-9)


class PureReductionTests(SimpleTestCase):

    def test_sigma_x_sits_on_the_admissible_edge(self):
        report = services.reduce_one_qubit_pure(SIGMA_X, -SIGMA_Z)
        self.assertEqual(report.admissible, (True, True))
        self.assertAlmostEqual(report.params.q1, 1.0)
        self.assertAlmostEqual(report.params.psi1, HALF_PI)
        self.assertAlmostEqual(report.params.p1, 0.0)
        self.assertEqual(report.angle_scale, 2)

    def test_minus_sigma_z_gives_sin(self):
        report = services.reduce_one_qubit_pure(-SIGMA_Z, SIGMA_X)
        self.assertAlmostEqual(report.params.q1, 1.0)
        self.assertAlmostEqual(report.params.psi1, 0.0)
        assert_allclose(coefficients(report.sinusoids[0]), [0, 1, 0], atol=1e-12)

    def test_sigma_z_is_reported_but_not_solved(self):
        report = services.reduce_one_qubit_pure(*services.spin_polarization_pair())
        self.assertEqual(report.inadmissible_players, (1,))
        self.assertIsNone(report.params)
        self.assertAlmostEqual(report.sinusoids[0].sin_coeff, -1.0)
        self.assertAlmostEqual(report.physical_payoff(QUARTER_PI, 0.0, 1), -1.0)
        with self.assertRaises(InadmissibleGameError) as raised:
            services.solve_physical(report)
        self.assertEqual(raised.exception.players, (1,))

    def test_printed_sin_sign_is_flagged(self):
        report = services.reduce_one_qubit_pure(SIGMA_Z, SIGMA_X)
        self.assertAlmostEqual(residual(report, 'sin_coeff', 1, 'printed').residual, 2.0)
        self.assertAlmostEqual(residual(report, 'sin_coeff', 1, 'derived').residual, 0.0)
        self.assertIn(residual(report, 'sin_coeff', 1, 'printed'), report.flagged_residuals())

    def test_non_hermitian_payoff_rejected(self):
        with self.assertRaises(ValidationError):
            services.reduce_one_qubit_pure([[0, 1], [0, 0]], SIGMA_X)

    def test_wrong_dimension_rejected(self):
        with self.assertRaises(DimensionError):
            services.reduce_one_qubit_pure(np.eye(4), SIGMA_X)

    def test_non_commuting_pair_is_non_trivial(self):
        report = services.reduce_one_qubit_pure(-SIGMA_Z, SIGMA_X)
        self.assertFalse(report.non_triviality.trivial)
        report = services.reduce_one_qubit_pure(IDENTITY_2, SIGMA_X)
        self.assertIn(1, report.non_triviality.trivial_players)

    def test_degenerate_tolerance_override_reaches_the_report(self):
        report = services.GameReducer({'DEGENERATE_Q_TOL': 0.5}).reduce_one_qubit_pure(-0.1 * SIGMA_Z, SIGMA_X)
        self.assertEqual(report.degenerate_players, (1,))
        self.assertEqual(report.params.degenerate_players, frozenset({1}))
        self.assertEqual(services.reduce_one_qubit_pure(-0.1 * SIGMA_Z, SIGMA_X).degenerate_players, ())

    def test_rounded_quarter_pi_bound_is_accepted(self):
        game = engine.rotation_game(
            services.pure_plus_state(), (-SIGMA_Z, SIGMA_X), [(0.0, 0.785398163397)] * 2, ordering=Ordering.DYNAMIC
        )
        report = services.reduce_game(game)
        self.assertAlmostEqual(report.params.q1, 1.0)

    def test_other_intervals_are_rejected(self):
        game = engine.rotation_game(
            services.pure_plus_state(), (-SIGMA_Z, SIGMA_X), [(0.0, 0.78)] * 2, ordering=Ordering.DYNAMIC
        )
        with self.assertRaises(DomainError):
            services.reduce_game(game)


class MixedReductionTests(SimpleTestCase):

    def test_maximally_mixed_state_is_degenerate(self):
        report = services.reduce_one_qubit_mixed(SIGMA_X, SIGMA_Z, 0.5)
        self.assertEqual(report.degenerate_players, (1, 2))
        self.assertIs(services.solve_physical(report).kind, SolutionKind.DEGENERATE)

    def test_pure_limit_matches_the_one_state(self):
        mixed = services.reduce_one_qubit_mixed(SIGMA_X, SIGMA_Z, 0.0)
        pure = services.GameReducer().reduce_game(
            services.one_qubit_game(qm.projector(qm.ket(1, 2)), qm.validate_hermitian(SIGMA_X), qm.validate_hermitian(SIGMA_Z))
        )
        for a, b in zip(mixed.sinusoids, pure.sinusoids):
            assert_allclose(coefficients(a), coefficients(b), atol=1e-12)

    def test_printed_cos_coefficient_is_flagged(self):
        report = services.reduce_one_qubit_mixed(np.diag([2.0, 0.0]), SIGMA_X, 0.25)
        self.assertAlmostEqual(report.sinusoids[0].cos_coeff, -0.5)
        printed = residual(report, 'cos_coeff', 1, 'printed')
        self.assertAlmostEqual(printed.value, -1.5)
        self.assertAlmostEqual(printed.residual, 1.0)
        self.assertAlmostEqual(residual(report, 'cos_coeff', 1, 'derived').residual, 0.0)
        self.assertEqual(report.mixing, 0.25)

    def test_probability_out_of_range(self):
        with self.assertRaises(DomainError):
            services.reduce_one_qubit_mixed(SIGMA_X, SIGMA_Z, 1.5)
        with self.assertRaises(DomainError):
            services.reduce_one_qubit_mixed(SIGMA_X, SIGMA_Z, None)


class TwoQubitReductionTests(SimpleTestCase):

    def test_zz_payoff(self):
        zz = np.kron(SIGMA_Z, SIGMA_Z)
        report = services.reduce_two_qubit(zz, zz)
        self.assertEqual(report.aggregates[1]['A'], -4.0)
        self.assertEqual(report.aggregates[1]['B'], 0.0)
        assert_allclose(coefficients(report.sinusoids[0]), [0, 0, -1], atol=1e-12)
        self.assertAlmostEqual(report.params.q1, 1.0)
        self.assertAlmostEqual(report.params.psi1, -HALF_PI)
        self.assertEqual(report.admissible, (True, True))

    def test_identity_is_degenerate(self):
        report = services.reduce_two_qubit(np.eye(4), np.kron(SIGMA_Z, SIGMA_Z))
        self.assertAlmostEqual(report.sinusoids[0].offset, 1.0)
        self.assertEqual(report.degenerate_players, (1,))

    def test_positive_off_diagonal_sum_is_inadmissible(self):
        x = np.zeros((4, 4))
        x[0, 1] = x[1, 0] = x[0, 2] = x[2, 0] = 1.0
        report = services.reduce_two_qubit(x, np.kron(SIGMA_Z, SIGMA_Z))
        self.assertEqual(report.aggregates[1]['B'], 2.0)
        self.assertAlmostEqual(report.sinusoids[0].sin_coeff, -1.0)
        self.assertEqual(report.inadmissible_players, (1,))

    def test_symmetric_off_diagonal_pattern_cancels(self):
        x = np.zeros((4, 4))
        for i, j in ((0, 1), (0, 2), (1, 3), (2, 3)):
            x[i, j] = x[j, i] = 1.0
        report = services.reduce_two_qubit(x, np.kron(SIGMA_Z, SIGMA_Z))
        self.assertEqual(report.aggregates[1]['B'], 4.0)
        self.assertEqual(report.aggregates[1]['B_prime'], 0.0)
        self.assertAlmostEqual(report.sinusoids[0].sin_coeff, 0.0)
        self.assertAlmostEqual(residual(report, 'sin_coeff', 1, 'printed').residual, 2.0)
        self.assertEqual(report.degenerate_players, (1,))

    def test_wrong_dimension_rejected(self):
        with self.assertRaises(DimensionError):
            services.reduce_two_qubit(SIGMA_X, SIGMA_Z)


class SolvePhysicalTests(SimpleTestCase):

    def test_spin_example_lands_on_case_six_corner(self):
        report = services.reduce_one_qubit_pure(-SIGMA_Z, SIGMA_X)
        solution = services.solve_physical(report)
        self.assertIs(solution.kind, SolutionKind.UNIQUE)
        self.assertEqual(solution.case, 6)
        assert_allclose(solution.point, (QUARTER_PI, 0.0), atol=1e-12)
        self.assertTrue(solution.certificate.passed)
        f1, f2 = engine.payoff_functions(report.game)
        self.assertAlmostEqual(f1(*solution.point), 1.0)
        self.assertAlmostEqual(f2(*solution.point), 0.0)

    def test_equal_payoffs_give_a_physical_continuum(self):
        report = services.reduce_one_qubit_pure(-SIGMA_Z, -SIGMA_Z)
        solution = services.solve_physical(report)
        self.assertIs(solution.kind, SolutionKind.CONTINUUM)
        self.assertAlmostEqual(solution.angle_sum, QUARTER_PI)
        self.assertTrue(solution.certificate.passed)

    def test_identity_payoff_is_degenerate(self):
        solution = services.solve_physical(services.reduce_one_qubit_pure(IDENTITY_2, SIGMA_X))
        self.assertIs(solution.kind, SolutionKind.DEGENERATE)
        self.assertEqual(solution.degenerate_players, frozenset({1}))

    def test_large_constant_payoff_is_degenerate_not_inadmissible(self):
        report = services.reduce_one_qubit_pure(1e6 * IDENTITY_2, SIGMA_X)
        self.assertEqual(report.inadmissible_players, ())
        self.assertEqual(report.degenerate_players, (1,))
        solution = services.solve_physical(report)
        self.assertIs(solution.kind, SolutionKind.DEGENERATE)
        self.assertEqual(solution.degenerate_players, frozenset({1}))

    def test_scaled_payoffs_keep_the_worked_equilibrium(self):
        report = services.reduce_one_qubit_pure(-1e6 * SIGMA_Z, 1e6 * SIGMA_X)
        self.assertEqual(report.inadmissible_players, ())
        self.assertEqual(report.degenerate_players, ())
        solution = services.solve_physical(report)
        self.assertEqual(solution.case, 6)
        assert_allclose(solution.point, (QUARTER_PI, 0.0), atol=1e-12)
        self.assertTrue(solution.certificate.passed)

    def test_unknown_model(self):
        with self.assertRaises(DomainError):
            services.GameReducer().reduce('three_qubit', SIGMA_X, SIGMA_Z)


class ReductionInvariantTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(settings.QUANTUM_GAMES['SEED'])
        self.grid = np.linspace(0.0, QUARTER_PI, 50)
        self.thetas, self.phis = np.meshgrid(self.grid, self.grid, indexing='ij')

    def random_reports(self, count=100):
        reducer = services.GameReducer()
        for index in range(count):
            yield reducer.reduce_one_qubit_pure(random_hermitian(self.rng, 2), random_hermitian(self.rng, 2))
            yield reducer.reduce_one_qubit_mixed(
                random_hermitian(self.rng, 2), random_hermitian(self.rng, 2), (0.0, 0.25, 0.5)[index % 3]
            )
            yield reducer.reduce_two_qubit(random_hermitian(self.rng, 4), random_hermitian(self.rng, 4))

    def test_round_trip_fidelity(self):
        for report in self.random_reports():
            for player in (1, 2):
                engine_values = engine.payoff_surface(report.game, self.thetas, self.phis, player)
                assert_allclose(report.physical_payoff(self.thetas, self.phis, player), engine_values, atol=1e-9)
                if report.params is not None:
                    reduced = game_a.evaluate(report.params, 2 * self.thetas, 2 * self.phis, player)
                    assert_allclose(reduced, engine_values, atol=1e-9)

    def test_sum_dependence(self):
        for report in self.random_reports(count=20):
            for player in (1, 2):
                self.assertLessEqual(services.sum_dependence(report.game, player, rng=self.rng), 1e-12)

    def test_offset_identities(self):
        for report in self.random_reports(count=30):
            for player in (1, 2):
                self.assertLessEqual(residual(report, 'offset', player, 'derived').residual, 1e-12)

    def test_mixed_limits(self):
        for _ in range(20):
            P1, P2 = random_hermitian(self.rng, 2), random_hermitian(self.rng, 2)
            half = services.reduce_one_qubit_mixed(P1, P2, 0.5)
            self.assertEqual(half.degenerate_players, (1, 2))
            zero = services.reduce_one_qubit_mixed(P1, P2, 0.0)
            one_state = services.GameReducer().reduce_game(
                services.one_qubit_game(qm.projector(qm.ket(1, 2)), qm.validate_hermitian(P1), qm.validate_hermitian(P2))
            )
            for a, b in zip(zero.sinusoids, one_state.sinusoids):
                assert_allclose(coefficients(a), coefficients(b), atol=1e-12)

    def test_admissible_equilibria_are_certified(self):
        certified = 0
        for report in self.random_reports(count=30):
            if report.params is None or report.degenerate_players:
                continue
            solution = services.solve_physical(report, epsilon=1e-6, grid_n=500)
            for theta, phi in solution.points():
                self.assertTrue(0.0 <= theta <= QUARTER_PI + 1e-12 and 0.0 <= phi <= QUARTER_PI + 1e-12)
            self.assertTrue(solution.certificate.passed)
            certified += 1
        self.assertGreater(certified, 0)
