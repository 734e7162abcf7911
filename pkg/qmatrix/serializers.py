import numbers

import numpy as np
from rest_framework import serializers

from .exceptions import DimensionError, ValidationError
from .services import as_matrix


def _parse_entry(entry):
    if isinstance(entry, bool):
        raise ValidationError('matrix literal', message=f"boolean {entry!r} is not a matrix entry")
    if isinstance(entry, numbers.Real):
        return complex(float(entry), 0.0)
    if (
        isinstance(entry, (list, tuple))
        and len(entry) == 2
        and all(isinstance(part, numbers.Real) and not isinstance(part, bool) for part in entry)
    ):
        return complex(float(entry[0]), float(entry[1]))
    raise ValidationError(
        'matrix literal',
        message=f"entry {entry!r} is neither a number nor an [re, im] pair",
    )


def parse_matrix_literal(literal):
    """Parse nested rows of numbers or [re, im] pairs into a complex matrix."""
    if not isinstance(literal, (list, tuple)) or not literal:
        raise ValidationError('matrix literal', message='matrix literal must be a non-empty list of rows')
    rows = []
    for index, row in enumerate(literal):
        if not isinstance(row, (list, tuple)) or not row:
            raise ValidationError('matrix literal', message=f"row {index} must be a non-empty list")
        rows.append([_parse_entry(entry) for entry in row])
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise DimensionError(f"ragged matrix literal with row widths {sorted(widths)}")
    return as_matrix(rows)


def _format_entry(value):
    if value.imag == 0.0:
        return float(value.real)
    return [float(value.real), float(value.imag)]


def matrix_to_literal(matrix):
    """Inverse of parse_matrix_literal; purely real entries use the bare-number shorthand."""
    return [[_format_entry(complex(value)) for value in row] for row in np.asarray(matrix)]


class MatrixLiteralField(serializers.Field):
    """DRF field for the matrix literal convention used in definition files."""

    default_error_messages = {
        'invalid': 'Invalid matrix literal: {reason}',
    }

    def __init__(self, *, shape=None, **kwargs):
        self.shape = shape
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        try:
            matrix = parse_matrix_literal(data)
        except (ValidationError, DimensionError) as exc:
            self.fail('invalid', reason=str(exc))
        if self.shape is not None and matrix.shape != self.shape:
            self.fail('invalid', reason=f"expected shape {self.shape}, got {matrix.shape}")
        return matrix

    def to_representation(self, value):
        return matrix_to_literal(value)
