import math

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from game_a import services as game_a
from game_a.domain import GameAParams
from qmatrix.exceptions import CostGuardError, DomainError, RankDeficientError
from reductions.services import extract_sinusoid

from . import services

HALF_PI = math.pi / 2


def pair(psi1, psi2, q1=1.0, q2=1.0):
    return game_a.payoff_pair(GameAParams.from_phases(psi1, psi2, q1=q1, q2=q2))


def constant(value):
    return lambda theta, phi: np.full(np.broadcast(theta, phi).shape, value)


class VerifyNashTests(SimpleTestCase):

    def test_case_three_equilibrium_passes(self):
        certificate = services.verify_nash(pair(-math.pi / 4, math.pi / 4), (HALF_PI, 0.0), epsilon=1e-9, grid_n=1001)
        self.assertTrue(certificate.passed)
        self.assertLessEqual(certificate.worst_gain, 1e-9)

    def test_shifted_point_fails(self):
        certificate = services.verify_nash(
            pair(-math.pi / 4, math.pi / 4), (HALF_PI - 0.1, 0.0), epsilon=1e-9, grid_n=1001
        )
        self.assertFalse(certificate.passed)
        self.assertGreater(certificate.max_unilateral_gain[0], 1e-3)

    def test_constant_payoffs_pass_with_zero_gain(self):
        certificate = services.verify_nash((constant(2.0), constant(-1.0)), (0.3, 1.2), grid_n=11)
        self.assertTrue(certificate.passed)
        self.assertEqual(certificate.max_unilateral_gain, (0.0, 0.0))

    def test_point_outside_domain(self):
        with self.assertRaises(DomainError):
            services.verify_nash(pair(0.0, 0.0), (2.0, 0.0))

    def test_grid_needs_two_points(self):
        with self.assertRaises(DomainError):
            services.verify_nash(pair(0.0, 0.0), (0.0, 0.0), grid_n=1)

    def test_effective_epsilon_adds_lipschitz_step(self):
        certificate = services.verify_nash(
            pair(-math.pi / 4, math.pi / 4), (HALF_PI, 0.0), epsilon=1e-6, grid_n=101, lipschitz=2.0
        )
        self.assertAlmostEqual(certificate.effective_epsilon, 1e-6 + 2.0 * HALF_PI / 100)

    def test_monotone_in_epsilon(self):
        rng = np.random.default_rng(settings.QUANTUM_GAMES['SEED'])
        epsilons = [1e-8, 1e-6, 1e-4, 1e-2, 1e-1, 1.0]
        for _ in range(50):
            fns = pair(*rng.uniform(-HALF_PI, HALF_PI, 2), *rng.uniform(0.1, 2.0, 2))
            point = tuple(rng.uniform(0.0, HALF_PI, 2))
            verdicts = [services.verify_nash(fns, point, epsilon=e, grid_n=101).passed for e in epsilons]
            first = verdicts.index(True) if True in verdicts else len(verdicts)
            self.assertTrue(all(verdicts[first:]))


class GridArgmaxTests(SimpleTestCase):

    def test_sine_peaks_at_right_end(self):
        argmax, value = services.grid_argmax(np.sin, (0.0, HALF_PI), 10001)
        self.assertAlmostEqual(argmax, HALF_PI, delta=HALF_PI / 10000)
        self.assertAlmostEqual(value, 1.0)

    def test_ties_go_to_lower_bound(self):
        argmax, value = services.grid_argmax(lambda x: np.ones_like(x), (0.2, 1.0), 50)
        self.assertEqual(argmax, 0.2)
        self.assertEqual(value, 1.0)

    def test_matches_closed_form_best_response(self):
        params = GameAParams.from_phases(0.2, 0.0)
        f1 = game_a.payoff_pair(params)[0]
        argmax, _ = services.grid_argmax(lambda theta: f1(theta, 0.3), (0.0, HALF_PI), 1001)
        self.assertAlmostEqual(argmax, HALF_PI - 0.5, delta=HALF_PI / 1000)

    def test_agrees_with_best_response_for_random_games(self):
        rng = np.random.default_rng(settings.QUANTUM_GAMES['SEED'])
        grid_n = 1001
        step = HALF_PI / (grid_n - 1)
        for _ in range(1000):
            psi1, psi2 = rng.uniform(-HALF_PI, HALF_PI, 2)
            q1, q2 = rng.uniform(0.1, 3.0, 2)
            params = GameAParams(p1=rng.normal(), q1=q1, psi1=psi1, p2=rng.normal(), q2=q2, psi2=psi2)
            phi = rng.uniform(0.0, HALF_PI)
            f1 = game_a.payoff_pair(params)[0]
            argmax, _ = services.grid_argmax(lambda theta: f1(theta, phi), (0.0, HALF_PI), grid_n)
            self.assertLessEqual(abs(argmax - game_a.best_response_p1(params, phi)), step)


class FitSinusoidTests(SimpleTestCase):

    def setUp(self):
        self.xs = np.linspace(0.0, HALF_PI, 200)

    def test_exact_cosine_with_offset(self):
        fitted, residual = services.fit_sinusoid(self.xs, 2 + np.cos(2 * self.xs))
        assert_allclose([fitted.offset, fitted.sin_coeff, fitted.cos_coeff], [2, 0, 1], atol=1e-12)
        self.assertLessEqual(residual, 1e-12)

    def test_fourth_harmonic_is_detected(self):
        _, residual = services.fit_sinusoid(self.xs, np.sin(2 * self.xs) + 0.5 * np.sin(4 * self.xs))
        self.assertGreater(residual, 0.1)

    def test_three_points_reproduce_three_point_extraction(self):
        def f(x):
            return 0.3 + 0.7 * np.sin(2 * np.asarray(x)) - 0.2 * np.cos(2 * np.asarray(x))

        xs = np.array([0.0, math.pi / 4, HALF_PI])
        fitted, residual = services.fit_sinusoid(xs, f(xs))
        extracted = extract_sinusoid(f)
        assert_allclose(
            [fitted.offset, fitted.sin_coeff, fitted.cos_coeff],
            [extracted.offset, extracted.sin_coeff, extracted.cos_coeff],
            atol=1e-12,
        )
        self.assertLessEqual(residual, 1e-12)

    def test_rank_deficient_samples(self):
        with self.assertRaises(RankDeficientError):
            services.fit_sinusoid([0.0, 1.0], [1.0, 2.0])
        with self.assertRaises(RankDeficientError):
            services.fit_sinusoid([0.3, 0.3, 1.0], [1.0, 1.0, 2.0])

    def test_recovers_random_coefficients(self):
        rng = np.random.default_rng(settings.QUANTUM_GAMES['SEED'])
        for _ in range(500):
            p, alpha, beta = rng.uniform(-5.0, 5.0, 3)
            values = p + alpha * np.sin(2 * self.xs) + beta * np.cos(2 * self.xs)
            fitted, _ = services.fit_sinusoid(self.xs, values)
            assert_allclose([fitted.offset, fitted.sin_coeff, fitted.cos_coeff], [p, alpha, beta], atol=1e-10)


class NashScanTests(SimpleTestCase):

    def assertHitsNear(self, hits, point, radius, step):
        self.assertTrue(hits)
        for theta, phi in hits:
            self.assertLessEqual(max(abs(theta - point[0]), abs(phi - point[1])) / step, radius)

    def test_unique_case_six_scan(self):
        epsilon, grid_n = 1e-4, 300
        step = HALF_PI / (grid_n - 1)
        hits = services.nash_scan(pair(math.pi / 6, math.pi / 3), epsilon=epsilon, grid_n=grid_n)
        self.assertHitsNear(hits, (math.pi / 3, 0.0), services.uniqueness_radius(epsilon, 1.0, step), step)

    def test_equal_phases_trace_the_anti_diagonal(self):
        epsilon = 1e-4
        hits = services.nash_scan(pair(0.0, 0.0), epsilon=epsilon, grid_n=300)
        self.assertGreaterEqual(len(hits), 300)
        for theta, phi in hits:
            self.assertLessEqual(abs(theta + phi - HALF_PI), math.acos(1 - epsilon) + 1e-12)

    def test_constant_payoffs_pass_everywhere(self):
        params = GameAParams.from_phases(0.0, 0.0, q1=0.0, q2=0.0)
        hits = services.nash_scan(game_a.payoff_pair(params), grid_n=50)
        self.assertEqual(len(hits), 2500)

    def test_cost_guard(self):
        with self.assertRaises(CostGuardError):
            services.nash_scan(pair(0.0, 0.0), grid_n=settings.QUANTUM_GAMES['SCAN_MAX_GRID'] + 1)

    def test_hits_stay_near_every_unique_equilibrium(self):
        rng = np.random.default_rng(settings.QUANTUM_GAMES['SEED'])
        epsilon, grid_n = 1e-4, 300
        step = HALF_PI / (grid_n - 1)
        scanned = 0
        while scanned < 12:
            psi1, psi2 = rng.uniform(-HALF_PI, HALF_PI, 2)
            if abs(psi1 - psi2) < 0.3:
                continue
            q1, q2 = rng.uniform(0.5, 2.0, 2)
            params = GameAParams.from_phases(psi1, psi2, q1=q1, q2=q2)
            solution = game_a.solve_closed_form(params)
            hits = services.nash_scan(game_a.payoff_pair(params), epsilon=epsilon, grid_n=grid_n)
            radius = services.uniqueness_radius(epsilon, min(q1, q2), step)
            self.assertHitsNear(hits, solution.point, radius, step)
            scanned += 1

    def test_uniqueness_radius(self):
        self.assertEqual(services.uniqueness_radius(0.0, 1.0, 0.01), 2.0)
        self.assertAlmostEqual(services.uniqueness_radius(2e-4, 1.0, 0.01), 2.0 + math.sqrt(4e-4) / 0.01)
        self.assertEqual(services.uniqueness_radius(1e-4, 0.0, 0.01), math.inf)
