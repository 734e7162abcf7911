from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

ComplexMatrix = npt.NDArray[np.complex128]


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Square matrix with ||M - M^dagger||_max <= tolerance."""

    matrix: ComplexMatrix
    tolerance: float
    deviation: float = 0.0

    @property
    def dimension(self):
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    matrix: ComplexMatrix
    tolerance: float
    eigenvalues: npt.NDArray[np.float64] = None

    @property
    def dimension(self):
        return self.matrix.shape[0]

    @property
    def is_pure(self):
        purity = np.trace(self.matrix @ self.matrix).real
        return abs(purity - 1.0) <= self.tolerance
