import math

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase
from numpy.testing import assert_allclose
from scipy.stats import unitary_group

from qmatrix import conf
from qmatrix import services as qm
from qmatrix.domain import HermitianOperator
from qmatrix.exceptions import DimensionError, DomainError, PayoffResidueError, ValidationError
from qmatrix.services import IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z

from . import services
from .domain import Ordering, QuantumGame, StrategyProfile, StrategySpace

QUARTER_PI = math.pi / 4
PLUS = np.array([1, 1]) / math.sqrt(2)
BELL_TYPE = np.array([0, 1, 1, 0]) / math.sqrt(2)


def one_qubit_game(p1, p2=IDENTITY_2, state=PLUS):
    return services.rotation_game(
        qm.projector(state) if np.ndim(state) == 1 else state,
        [p1, p2],
        [(0.0, QUARTER_PI), (0.0, QUARTER_PI)],
        ordering=Ordering.DYNAMIC,
    )


def two_qubit_game(p1, p2=None):
    p2 = np.eye(4) if p2 is None else p2
    return services.rotation_game(
        qm.projector(BELL_TYPE),
        [p1, p2],
        [(0.0, QUARTER_PI), (0.0, QUARTER_PI)],
        targets=[0, 1],
    )


def unitary_game(rho, payoffs):
    return QuantumGame(
        initial_state=qm.validate_density(rho),
        players=[StrategySpace.unrestricted(), StrategySpace.unrestricted()],
        payoffs=[qm.validate_hermitian(p) for p in payoffs],
    )


def random_density(rng, dimension):
    g = rng.normal(size=(dimension, dimension)) + 1j * rng.normal(size=(dimension, dimension))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_hermitian(rng, dimension):
    g = rng.normal(size=(dimension, dimension)) + 1j * rng.normal(size=(dimension, dimension))
    return (g + g.conj().T) / 2


class FinalStateTests(SimpleTestCase):

    def test_identity_profile_keeps_the_state(self):
        rho = np.diag([0.3, 0.7])
        game = one_qubit_game(SIGMA_X, state=rho)
        assert_allclose(services.final_state(game, StrategyProfile.of(0.0, 0.0)).matrix, rho)

    def test_total_angle_pi_over_four_rotates_plus_to_one(self):
        game = one_qubit_game(SIGMA_X)
        rho_f = services.final_state(game, StrategyProfile.of(math.pi / 8, math.pi / 8)).matrix
        assert_allclose(rho_f, np.diag([0, 1]), atol=1e-12)

    def test_bell_type_state_unchanged_by_identity(self):
        game = two_qubit_game(np.kron(SIGMA_Z, SIGMA_Z))
        rho_f = services.final_state(game, StrategyProfile.of(0.0, 0.0)).matrix
        assert_allclose(rho_f, qm.projector(BELL_TYPE), atol=1e-15)

    def test_angle_outside_interval_is_rejected(self):
        game = one_qubit_game(SIGMA_X)
        with self.assertRaises(DomainError):
            services.final_state(game, StrategyProfile.of(1.0, 0.0))

    def test_profile_length_must_match_players(self):
        game = one_qubit_game(SIGMA_X)
        with self.assertRaises(DimensionError):
            services.final_state(game, StrategyProfile.of(0.0))

    def test_non_unitary_choice_is_rejected(self):
        game = unitary_game(np.diag([1, 0]), [SIGMA_X, SIGMA_Z])
        with self.assertRaises(ValidationError):
            services.final_state(game, StrategyProfile.of(np.diag([1, 2]), np.eye(2)))

    def test_finite_strategy_sets(self):
        game = QuantumGame(
            initial_state=qm.validate_density(np.diag([1, 0])),
            players=[StrategySpace.finite([IDENTITY_2, SIGMA_X]), StrategySpace.finite([IDENTITY_2])],
            payoffs=[qm.validate_hermitian(SIGMA_Z), qm.validate_hermitian(SIGMA_Z)],
        )
        self.assertAlmostEqual(services.payoff(game, StrategyProfile.of(1, 0), 1), -1.0)
        self.assertAlmostEqual(services.payoff(game, StrategyProfile.of(SIGMA_X, IDENTITY_2), 2), -1.0)
        with self.assertRaises(DomainError):
            services.payoff(game, StrategyProfile.of(SIGMA_Y, IDENTITY_2), 1)

    def test_game_rejects_mismatched_payoff_dimension(self):
        with self.assertRaises(DimensionError):
            QuantumGame(
                initial_state=qm.validate_density(np.diag([1, 0])),
                players=[StrategySpace.rotation()],
                payoffs=[qm.validate_hermitian(np.eye(4))],
            )

    def test_strategy_space_rejects_empty_interval(self):
        with self.assertRaises(DomainError):
            StrategySpace.rotation(1.0, 0.5)

    def test_strategy_space_tolerance_follows_settings(self):
        self.assertEqual(StrategySpace.unrestricted().tolerance, settings.QUANTUM_GAMES['VALIDATION_TOL'])
        with conf.overrides({'VALIDATION_TOL': 1e-6}):
            self.assertEqual(StrategySpace.finite([IDENTITY_2]).tolerance, 1e-6)
        self.assertEqual(StrategySpace.unrestricted(tolerance=1e-4).tolerance, 1e-4)

    def test_ordering_sensitivity_detects_non_commuting_players(self):
        hadamard = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        game = unitary_game(np.diag([1, 0]), [SIGMA_X, SIGMA_Z])
        profile = StrategyProfile.of(hadamard, SIGMA_Z)
        self.assertAlmostEqual(services.ordering_sensitivity(game, profile), 1.0)


class PayoffTests(SimpleTestCase):

    def test_identity_payoff_is_one(self):
        game = one_qubit_game(IDENTITY_2)
        for theta, phi in [(0.0, 0.0), (0.3, 0.1), (QUARTER_PI, QUARTER_PI)]:
            self.assertAlmostEqual(services.payoff(game, StrategyProfile.of(theta, phi), 1), 1.0, places=12)

    def test_sigma_x_polarization_of_plus_state(self):
        game = one_qubit_game(SIGMA_X)
        self.assertAlmostEqual(services.payoff(game, StrategyProfile.of(0.0, 0.0), 1), 1.0, places=12)

    def test_zz_correlation_of_bell_type_state(self):
        game = two_qubit_game(np.kron(SIGMA_Z, SIGMA_Z))
        self.assertAlmostEqual(services.payoff(game, StrategyProfile.of(0.0, 0.0), 1), -1.0, places=12)

    def test_imaginary_residue_is_an_error(self):
        rho = qm.validate_density(qm.projector(PLUS))
        rogue = HermitianOperator(matrix=np.array([[0, 1j], [0, 0]]), tolerance=1e-10)
        game = QuantumGame(
            initial_state=rho,
            players=[StrategySpace.rotation()],
            payoffs=[rogue],
        )
        with self.assertRaises(PayoffResidueError):
            services.payoff(game, StrategyProfile.of(0.0), 1)

    def test_unknown_player_rejected(self):
        game = one_qubit_game(SIGMA_X)
        with self.assertRaises(DomainError):
            services.payoff(game, StrategyProfile.of(0.0, 0.0), 3)

    def test_payoff_surface_matches_pointwise_payoff(self):
        game = two_qubit_game(np.kron(SIGMA_X, SIGMA_Z), np.kron(SIGMA_Y, SIGMA_Y))
        thetas = np.linspace(0, QUARTER_PI, 5)
        phis = np.linspace(0, QUARTER_PI, 4)
        surface = services.payoff_surface(game, thetas[:, None], phis[None, :], 2)
        self.assertEqual(surface.shape, (5, 4))
        for i, theta in enumerate(thetas):
            for j, phi in enumerate(phis):
                expected = services.payoff(game, StrategyProfile.of(theta, phi), 2)
                self.assertAlmostEqual(surface[i, j], expected, places=12)


class ProjectionPayoffTests(SimpleTestCase):

    def test_all_ones_is_identity(self):
        operator = services.projection_payoff(np.ones(4), services.computational_basis(4))
        assert_allclose(operator.matrix, np.eye(4))

    def test_single_projector_gives_projection_probability(self):
        operator = services.projection_payoff([1, 0], services.computational_basis(2))
        assert_allclose(operator.matrix, np.diag([1, 0]))
        game = one_qubit_game(operator.matrix)
        profile = StrategyProfile.of(0.2, 0.3)
        amplitude = (qm.rotation(0.5) @ PLUS)[0]
        self.assertAlmostEqual(services.payoff(game, profile, 1), abs(amplitude) ** 2, places=12)

    def test_anti_correlated_coefficients_on_bell_type_state(self):
        coefficients = np.array([[0, 1], [1, 0]])
        basis = services.product_basis(services.computational_basis(2), 2)
        operator = services.projection_payoff(coefficients, basis)
        assert_allclose(operator.matrix, np.diag([0, 1, 1, 0]))
        game = two_qubit_game(operator.matrix)
        self.assertAlmostEqual(services.payoff(game, StrategyProfile.of(0.0, 0.0), 1), 1.0, places=12)

    def test_length_mismatch(self):
        with self.assertRaises(DimensionError):
            services.projection_payoff([1, 0, 0], services.computational_basis(2))

    def test_non_orthonormal_basis(self):
        with self.assertRaises(ValidationError):
            services.projection_payoff([1, 1], [np.array([1, 0]), PLUS])


class NonTrivialityTests(SimpleTestCase):
    samples = np.linspace(0, QUARTER_PI, 9)

    def test_spin_polarization_pair_is_non_trivial(self):
        report = services.non_triviality(one_qubit_game(SIGMA_Z, SIGMA_X), self.samples)
        self.assertAlmostEqual(report.payoff_commutator, 2.0)
        self.assertFalse(report.trivial)

    def test_identity_payoffs_are_trivial(self):
        report = services.non_triviality(one_qubit_game(IDENTITY_2, IDENTITY_2), self.samples)
        self.assertTrue(report.trivial_payoffs)
        self.assertEqual(report.trivial_players, (1, 2))
        self.assertTrue(report.trivial)

    def test_sigma_y_commutes_with_planar_rotations(self):
        report = services.non_triviality(one_qubit_game(SIGMA_Y, np.diag([1, 2])), self.samples)
        self.assertEqual(report.trivial_players, (1,))
        self.assertGreater(report.strategy_commutators[1], 1e-3)
        self.assertTrue(report.trivial)


class EngineInvariantTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(settings.QUANTUM_GAMES['SEED'])

    def test_trace_preservation(self):
        for _ in range(200):
            dimension = int(self.rng.choice([2, 4]))
            game = unitary_game(random_density(self.rng, dimension), [np.eye(dimension)] * 2)
            profile = StrategyProfile.of(
                unitary_group.rvs(dimension, random_state=self.rng),
                unitary_group.rvs(dimension, random_state=self.rng),
            )
            rho_f = services.final_state(game, profile).matrix
            self.assertAlmostEqual(np.trace(rho_f).real, 1.0, delta=1e-12)

    def test_payoff_is_linear_in_the_operator(self):
        for _ in range(50):
            p, q = random_hermitian(self.rng, 4), random_hermitian(self.rng, 4)
            alpha, beta = self.rng.normal(size=2)
            theta, phi = self.rng.uniform(0, QUARTER_PI, size=2)
            profile = StrategyProfile.of(theta, phi)
            combined = services.payoff(two_qubit_game(alpha * p + beta * q), profile, 1)
            separate = (
                alpha * services.payoff(two_qubit_game(p), profile, 1)
                + beta * services.payoff(two_qubit_game(q), profile, 1)
            )
            self.assertAlmostEqual(combined, separate, delta=1e-12 * max(1.0, abs(separate)))

    def test_local_operations_commute(self):
        for _ in range(50):
            u1 = np.kron(unitary_group.rvs(2, random_state=self.rng), IDENTITY_2)
            u2 = np.kron(IDENTITY_2, unitary_group.rvs(2, random_state=self.rng))
            assert_allclose(u1 @ u2, u2 @ u1, atol=1e-12)
        game = two_qubit_game(np.kron(SIGMA_X, SIGMA_X))
        self.assertLessEqual(services.ordering_sensitivity(game, StrategyProfile.of(0.3, 0.6)), 1e-12)

    def test_projection_payoff_matches_probability_sum(self):
        basis = services.product_basis(services.computational_basis(2), 2)
        for _ in range(100):
            coefficients = self.rng.normal(size=(2, 2))
            operator = services.projection_payoff(coefficients, basis)
            game = two_qubit_game(operator.matrix)
            profile = StrategyProfile.of(*self.rng.uniform(0, QUARTER_PI, size=2))
            probabilities = services.projection_probabilities(game, profile, basis)
            expected = float(np.dot(coefficients.reshape(-1), probabilities))
            self.assertAlmostEqual(services.payoff(game, profile, 1), expected, delta=1e-12)
