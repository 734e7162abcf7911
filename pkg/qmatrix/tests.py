import math

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose, assert_array_equal
from rest_framework.exceptions import ValidationError as DRFValidationError
from scipy.stats import unitary_group

from . import services
from .exceptions import DimensionError, ValidationError
from .serializers import MatrixLiteralField, matrix_to_literal, parse_matrix_literal
from .services import IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z

_entries = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)
_small_matrices = arrays(np.complex128, (2, 2), elements=_entries)


def random_density(rng, dimension):
    g = rng.normal(size=(dimension, dimension)) + 1j * rng.normal(size=(dimension, dimension))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


class MatrixArithmeticTests(SimpleTestCase):

    def test_identity_product(self):
        m = np.array([[1 + 2j, 3], [4j, -1]])
        assert_array_equal(services.multiply(IDENTITY_2, m), m)

    def test_rotation_angle_addition(self):
        product = services.multiply(services.rotation(0.3), services.rotation(1.1))
        assert_allclose(product, services.rotation(1.4), atol=1e-12)

    def test_sigma_x_is_an_involution(self):
        assert_array_equal(services.multiply(SIGMA_X, SIGMA_X), IDENTITY_2)

    def test_multiply_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            services.multiply(np.eye(2), np.eye(3))

    def test_dagger(self):
        assert_array_equal(services.dagger(IDENTITY_2), IDENTITY_2)
        assert_allclose(services.dagger(services.rotation(0.7)), services.rotation(-0.7), atol=1e-15)
        assert_array_equal(services.dagger([[0, 1j], [0, 0]]), np.array([[0, 0], [-1j, 0]]))

    def test_trace(self):
        self.assertEqual(services.trace(np.eye(4)), 4)
        self.assertEqual(services.trace(SIGMA_Z), 0)
        with self.assertRaises(DimensionError):
            services.trace(np.ones((2, 3)))

    def test_trace_survives_unitary_conjugation(self):
        rng = np.random.default_rng(settings.QUANTUM_GAMES['SEED'])
        rho = random_density(rng, 4)
        u = unitary_group.rvs(4, random_state=rng)
        self.assertAlmostEqual(services.trace(services.conjugate(rho, u)).real, 1.0, delta=1e-12)

    def test_tensor(self):
        assert_array_equal(services.tensor(IDENTITY_2, IDENTITY_2), np.eye(4))
        assert_array_equal(services.tensor(SIGMA_Z, SIGMA_Z), np.diag([1, -1, -1, 1]))
        zero = services.projector(services.ket(0, 2))
        one = services.projector(services.ket(1, 2))
        expected = np.zeros((4, 4))
        expected[1, 1] = 1
        assert_array_equal(services.tensor(zero, one), expected)

    def test_rotation(self):
        assert_array_equal(services.rotation(0), IDENTITY_2)
        assert_allclose(services.rotation(math.pi / 2), [[0, -1], [1, 0]], atol=1e-15)
        plus = np.array([1, 1]) / math.sqrt(2)
        assert_allclose(services.rotation(math.pi / 4) @ plus, [0, 1], atol=1e-12)

    def test_rotation_stack_matches_rotation(self):
        angles = np.array([[0.0, 0.5], [1.0, -2.0]])
        stack = services.rotation_stack(angles)
        self.assertEqual(stack.shape, (2, 2, 2, 2))
        assert_allclose(stack[1, 0], services.rotation(1.0), atol=1e-15)

    def test_embed_local_matches_tensor(self):
        u = services.rotation(0.4)
        assert_allclose(services.embed_local(u, 0, 2), services.tensor(u, IDENTITY_2))
        assert_allclose(services.embed_local(u, 1, 2), services.tensor(IDENTITY_2, u))


class ValidationTests(SimpleTestCase):

    def test_mixed_state_is_a_density_matrix(self):
        rho = services.validate_density(np.diag([0.3, 0.7]))
        assert_allclose(rho.eigenvalues, [0.3, 0.7])
        self.assertFalse(rho.is_pure)

    def test_pure_state_passes_psd_check(self):
        plus = np.array([1, 1]) / math.sqrt(2)
        rho = services.validate_density(services.projector(plus))
        self.assertTrue(rho.is_pure)

    def test_sigma_x_is_hermitian_but_not_a_state(self):
        operator = services.validate_hermitian(SIGMA_X)
        self.assertEqual(operator.dimension, 2)
        with self.assertRaises(ValidationError) as ctx:
            services.validate_density(SIGMA_X)
        self.assertEqual(ctx.exception.invariant, 'unit trace')
        self.assertAlmostEqual(ctx.exception.magnitude, 1.0)

    def test_non_hermitian_reports_deviation(self):
        with self.assertRaises(ValidationError) as ctx:
            services.validate_hermitian([[1, 1], [0, 1]])
        self.assertEqual(ctx.exception.invariant, 'hermitian')
        self.assertEqual(ctx.exception.magnitude, 1.0)

    def test_negative_eigenvalue_rejected(self):
        with self.assertRaises(ValidationError) as ctx:
            services.validate_density(np.diag([1.5, -0.5]))
        self.assertEqual(ctx.exception.invariant, 'positive semidefinite')

    def test_unitary_validation(self):
        self.assertTrue(services.validate_unitary(services.rotation(0.2)))
        self.assertTrue(services.is_unitary(SIGMA_Y))
        self.assertFalse(services.is_unitary(np.diag([1, 2])))
        with self.assertRaises(ValidationError):
            services.validate_unitary(np.diag([1, 2]))

    def test_tolerance_is_configurable_per_call(self):
        slightly_off = np.array([[1, 1e-8], [0, 1]])
        with self.assertRaises(ValidationError):
            services.validate_hermitian(slightly_off)
        services.validate_hermitian(slightly_off, tol=1e-6)

    def test_validated_operator_keeps_its_tolerance(self):
        operator = services.validate_hermitian(np.array([[1, 1e-8], [0, 1]]), tol=1e-6)
        self.assertEqual(services.validate_hermitian(operator).tolerance, 1e-6)

    def test_density_failures_are_logged(self):
        with self.assertLogs('qmatrix.services', 'WARNING') as logs:
            with self.assertRaises(ValidationError):
                services.validate_density(np.diag([1.5, -0.5]))
        self.assertIn('smallest eigenvalue', logs.output[0])
        with self.assertLogs('qmatrix.services', 'WARNING') as logs:
            with self.assertRaises(ValidationError):
                services.validate_density(np.diag([1.0, 1.0]))
        self.assertIn('trace', logs.output[0])

    def test_non_finite_entries_rejected(self):
        with self.assertRaises(ValidationError):
            services.as_matrix([[1, np.nan], [0, 1]])


class MatrixInvariantTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(settings.QUANTUM_GAMES['SEED'])

    def test_unitary_conjugation_keeps_density_matrices_valid(self):
        for dimension in (2, 4, 8):
            for _ in range(20):
                rho = random_density(self.rng, dimension)
                u = unitary_group.rvs(dimension, random_state=self.rng)
                evolved = services.conjugate(rho, u)
                self.assertAlmostEqual(np.trace(evolved).real, 1.0, delta=1e-12)
                services.validate_density(evolved)

    def test_rotations_are_orthogonal(self):
        for theta in self.rng.uniform(-10, 10, size=1000):
            u = services.rotation(theta)
            assert_allclose(u @ services.dagger(u), IDENTITY_2, atol=1e-12)

    @hypothesis_settings(derandomize=True, max_examples=50, deadline=None)
    @given(_small_matrices)
    def test_dagger_is_an_exact_involution(self, m):
        assert_array_equal(services.dagger(services.dagger(m)), m)

    @hypothesis_settings(derandomize=True, max_examples=50, deadline=None)
    @given(_small_matrices, _small_matrices, _small_matrices)
    def test_tensor_is_associative(self, a, b, c):
        left = services.tensor(services.tensor(a, b), c)
        right = services.tensor(a, services.tensor(b, c))
        assert_allclose(left, right, rtol=1e-12, atol=1e-12)


class MatrixLiteralTests(SimpleTestCase):

    def test_pairs_and_real_shorthand(self):
        matrix = parse_matrix_literal([[0, [0, -1]], [[0, 1], 0]])
        assert_array_equal(matrix, SIGMA_Y)

    def test_literal_round_trip(self):
        matrix = np.array([[1, 2 - 1j], [2 + 1j, -3]])
        literal = matrix_to_literal(matrix)
        self.assertEqual(literal[0][0], 1.0)
        self.assertEqual(literal[0][1], [2.0, -1.0])
        assert_array_equal(parse_matrix_literal(literal), matrix)

    def test_ragged_literal_rejected(self):
        with self.assertRaises(DimensionError):
            parse_matrix_literal([[1, 0], [0]])

    def test_bad_entry_rejected(self):
        with self.assertRaises(ValidationError):
            parse_matrix_literal([[1, 'x'], [0, 1]])

    def test_serializer_field_enforces_shape(self):
        field = MatrixLiteralField(shape=(4, 4))
        with self.assertRaises(DRFValidationError):
            field.run_validation([[1, 0], [0, 1]])
