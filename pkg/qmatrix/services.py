"""Small dense complex linear algebra and quantum-object validation.

Matrices are plain ``numpy`` complex128 arrays. Two-qubit operators use the
basis order |00>, |01>, |10>, |11>: in a tensor product the first factor is
the slow index.
"""
import logging
import math

import numpy as np

from . import conf
from .domain import ComplexMatrix, DensityMatrix, HermitianOperator
from .exceptions import DimensionError, DomainError, ValidationError

logger = logging.getLogger(__name__)


def _frozen(entries):
    matrix = np.array(entries, dtype=np.complex128)
    matrix.setflags(write=False)
    return matrix


IDENTITY_2 = _frozen([[1, 0], [0, 1]])
SIGMA_X = _frozen([[0, 1], [1, 0]])
SIGMA_Y = _frozen([[0, -1j], [1j, 0]])
SIGMA_Z = _frozen([[1, 0], [0, -1]])


def as_matrix(entries) -> ComplexMatrix:
    """Coerce ``entries`` to a finite two-dimensional complex matrix."""
    matrix = np.array(entries, dtype=np.complex128)
    if matrix.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got {matrix.ndim} dimension(s)")
    if not np.all(np.isfinite(matrix)):
        raise ValidationError('finite entries', message='matrix contains NaN or Inf entries')
    return matrix


def _require_square(m):
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")


def max_norm(m) -> float:
    """Largest absolute entry (0 for empty input)."""
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def multiply(a, b) -> ComplexMatrix:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def dagger(m) -> ComplexMatrix:
    """Conjugate transpose."""
    return as_matrix(m).conj().T.copy()


def trace(m) -> complex:
    m = as_matrix(m)
    _require_square(m)
    return complex(np.trace(m))


def tensor(a, b) -> ComplexMatrix:
    """Kronecker product; result[i*rb + k, j*cb + l] = a[i, j] * b[k, l]."""
    return np.kron(as_matrix(a), as_matrix(b))


def commutator(a, b) -> ComplexMatrix:
    a, b = as_matrix(a), as_matrix(b)
    return multiply(a, b) - multiply(b, a)


def rotation(theta) -> ComplexMatrix:
    """Planar rotation [[cos, -sin], [sin, cos]]."""
    if not math.isfinite(theta):
        raise DomainError(f"rotation angle must be finite, got {theta}")
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rotation_stack(angles) -> np.ndarray:
    """Rotations for an array of angles, shape ``angles.shape + (2, 2)``."""
    angles = np.asarray(angles, dtype=np.float64)
    if not np.all(np.isfinite(angles)):
        raise DomainError('rotation angles must be finite')
    c, s = np.cos(angles), np.sin(angles)
    stack = np.empty(angles.shape + (2, 2), dtype=np.complex128)
    stack[..., 0, 0] = c
    stack[..., 0, 1] = -s
    stack[..., 1, 0] = s
    stack[..., 1, 1] = c
    return stack


def kron_stack(a, b) -> np.ndarray:
    """Kronecker product over the last two axes, broadcasting leading axes."""
    a, b = np.asarray(a), np.asarray(b)
    ra, ca = a.shape[-2:]
    rb, cb = b.shape[-2:]
    product = np.einsum('...ij,...kl->...ikjl', a, b)
    return product.reshape(product.shape[:-4] + (ra * rb, ca * cb))


def embed_local(operator, target, n_qubits) -> np.ndarray:
    """Place a single-qubit operator (or stack of them) on factor ``target``."""
    if not 0 <= target < n_qubits:
        raise DomainError(f"qubit target {target} outside 0..{n_qubits - 1}")
    operator = np.asarray(operator, dtype=np.complex128)
    if operator.shape[-2:] != (2, 2):
        raise DimensionError(f"local operator must be 2x2, got {operator.shape[-2:]}")
    left = np.eye(2 ** target, dtype=np.complex128)
    right = np.eye(2 ** (n_qubits - target - 1), dtype=np.complex128)
    return kron_stack(kron_stack(left, operator), right)


def qubit_count(dimension) -> int:
    n = int(round(math.log2(dimension))) if dimension > 0 else -1
    if n < 0 or 2 ** n != dimension:
        raise DimensionError(f"dimension {dimension} is not a power of two")
    return n


def ket(index, dimension) -> np.ndarray:
    """Computational basis vector |index>."""
    if not 0 <= index < dimension:
        raise DomainError(f"basis index {index} outside 0..{dimension - 1}")
    vector = np.zeros(dimension, dtype=np.complex128)
    vector[index] = 1.0
    return vector


def projector(vector) -> ComplexMatrix:
    """|v><v| for a state vector."""
    vector = np.asarray(vector, dtype=np.complex128).reshape(-1)
    return np.outer(vector, vector.conj())


def hermitian_deviation(m) -> float:
    return max_norm(m - m.conj().T)


def validate_hermitian(m, tol=None) -> HermitianOperator:
    if isinstance(m, HermitianOperator):
        # a validated operator keeps the tolerance it was accepted under
        tol = m.tolerance if tol is None else tol
        m = m.matrix
    tol = conf.get('VALIDATION_TOL', tol)
    m = as_matrix(m)
    _require_square(m)
    deviation = hermitian_deviation(m)
    if deviation > tol:
        logger.warning(f"Hermitian validation failed: max deviation {deviation:.3e} > {tol:.1e}")
        raise ValidationError('hermitian', deviation)
    m.setflags(write=False)
    return HermitianOperator(matrix=m, tolerance=tol, deviation=deviation)


def validate_density(m, tol=None) -> DensityMatrix:
    if isinstance(m, DensityMatrix):
        tol = m.tolerance if tol is None else tol
        m = m.matrix
    tol = conf.get('VALIDATION_TOL', tol)
    m = as_matrix(m)
    _require_square(m)
    deviation = hermitian_deviation(m)
    if deviation > tol:
        logger.warning(f"Density validation failed: hermitian deviation {deviation:.3e} > {tol:.1e}")
        raise ValidationError('hermitian', deviation)
    trace_error = abs(np.trace(m) - 1.0)
    if trace_error > tol:
        logger.warning(f"Density validation failed: trace off by {trace_error:.3e}")
        raise ValidationError('unit trace', float(trace_error))
    # eigvalsh reads one triangle only, so symmetrize first
    eigenvalues = np.linalg.eigvalsh((m + m.conj().T) / 2)
    smallest = float(eigenvalues[0])
    if smallest < -tol:
        logger.warning(f"Density validation failed: smallest eigenvalue {smallest:.3e}")
        raise ValidationError('positive semidefinite', -smallest)
    m.setflags(write=False)
    return DensityMatrix(matrix=m, tolerance=tol, eigenvalues=eigenvalues)


def unitary_deviation(m) -> float:
    m = as_matrix(m)
    _require_square(m)
    return max_norm(m @ m.conj().T - np.eye(m.shape[0]))


def validate_unitary(m, tol=None) -> bool:
    """Return True for a unitary matrix, raise ValidationError otherwise."""
    tol = conf.get('VALIDATION_TOL', tol)
    deviation = unitary_deviation(m)
    if deviation > tol:
        raise ValidationError('unitary', deviation)
    return True


def is_unitary(m, tol=None) -> bool:
    try:
        return validate_unitary(m, tol)
    except (ValidationError, DimensionError):
        return False


def conjugate(state, unitary) -> ComplexMatrix:
    """U rho U^dagger."""
    state, unitary = as_matrix(state), as_matrix(unitary)
    return multiply(multiply(unitary, state), dagger(unitary))
