"""Brute-force checks that back every closed-form claim.

Payoff functions passed here must accept numpy arrays and broadcast, i.e.
``f(theta_array, phi_array)`` returns an array of the broadcast shape.
"""
import logging
import math

import numpy as np

from qmatrix import conf
from qmatrix.exceptions import CostGuardError, DomainError, RankDeficientError
from reductions.domain import SinusoidalPayoff

from .domain import NashCertificate

logger = logging.getLogger(__name__)

SQUARE = ((0.0, math.pi / 2), (0.0, math.pi / 2))
# rounding slack for points computed as pi/2 - psi - theta and the like
POINT_SLACK = 1e-12


def _grid(interval, grid_n):
    if grid_n < 2:
        raise DomainError(f"grid needs at least 2 points, got {grid_n}")
    lo, hi = interval
    return np.linspace(lo, hi, grid_n)


def _evaluate(f, *args):
    shape = np.broadcast(*args).shape
    return np.broadcast_to(np.asarray(f(*args), dtype=np.float64), shape)


def grid_argmax(f, interval, grid_n):
    """Grid maximizer of a one-argument function; ties go to the smaller argument."""
    xs = _grid(interval, grid_n)
    values = _evaluate(f, xs)
    index = int(np.argmax(values))
    return float(xs[index]), float(values[index])


def verify_nash(payoff_fns, point, domain=SQUARE, epsilon=None, grid_n=None, lipschitz=None):
    """Largest unilateral grid improvement for each player at ``point``.

    ``lipschitz`` bounds |df/dangle|; when given, the certificate also records
    epsilon + lipschitz * step, the bound that holds off the grid.
    """
    epsilon = conf.get('CERTIFICATE_EPSILON', epsilon)
    grid_n = conf.get('CERTIFICATE_GRID', grid_n)
    f1, f2 = payoff_fns
    theta, phi = (float(v) for v in point)
    (lo1, hi1), (lo2, hi2) = domain
    if not (lo1 - POINT_SLACK <= theta <= hi1 + POINT_SLACK and lo2 - POINT_SLACK <= phi <= hi2 + POINT_SLACK):
        raise DomainError(f"point ({theta:.12g}, {phi:.12g}) outside the strategy domain")
    theta, phi = min(max(theta, lo1), hi1), min(max(phi, lo2), hi2)
    thetas = _grid((lo1, hi1), grid_n)
    phis = _grid((lo2, hi2), grid_n)
    gain1 = float(np.max(_evaluate(f1, thetas, phi)) - _evaluate(f1, theta, phi))
    gain2 = float(np.max(_evaluate(f2, theta, phis)) - _evaluate(f2, theta, phi))
    gains = (max(gain1, 0.0), max(gain2, 0.0))
    effective = None
    if lipschitz is not None:
        step = max(hi1 - lo1, hi2 - lo2) / (grid_n - 1)
        effective = epsilon + lipschitz * step
    return NashCertificate(
        epsilon=epsilon,
        grid_n=grid_n,
        max_unilateral_gain=gains,
        passed=gains[0] <= epsilon and gains[1] <= epsilon,
        checked_point=(theta, phi),
        effective_epsilon=effective,
    )


def verify_points(payoff_fns, points, domain=SQUARE, epsilon=None, grid_n=None, lipschitz=None):
    """Worst-case certificate over several points (a sampled continuum)."""
    certificate = None
    for point in points:
        current = verify_nash(payoff_fns, point, domain, epsilon, grid_n, lipschitz)
        certificate = current if certificate is None else certificate.combine(current)
    return certificate


def nash_scan(payoff_fns, domain=SQUARE, epsilon=None, grid_n=300):
    """Every grid point that passes the grid epsilon-Nash test."""
    epsilon = conf.get('CERTIFICATE_EPSILON', epsilon)
    max_grid = conf.get('SCAN_MAX_GRID')
    if grid_n > max_grid:
        raise CostGuardError(f"scan grid {grid_n} exceeds the limit of {max_grid} per axis")
    f1, f2 = payoff_fns
    thetas = _grid(domain[0], grid_n)
    phis = _grid(domain[1], grid_n)
    theta_mesh, phi_mesh = np.meshgrid(thetas, phis, indexing='ij')
    values1 = _evaluate(f1, theta_mesh, phi_mesh)
    values2 = _evaluate(f2, theta_mesh, phi_mesh)
    gain1 = values1.max(axis=0, keepdims=True) - values1
    gain2 = values2.max(axis=1, keepdims=True) - values2
    hits = np.argwhere((gain1 <= epsilon) & (gain2 <= epsilon))
    logger.info(f"Nash scan on a {grid_n}x{grid_n} grid found {len(hits)} point(s)")
    return [(float(thetas[i]), float(phis[j])) for i, j in hits]


def uniqueness_radius(epsilon, q, step):
    """Radius in grid cells that holds every epsilon-Nash hit around a unique equilibrium.

    Along a coordinate pinned at the domain edge the payoff falls off linearly
    and two cells suffice; at an interior optimum it is flat to second order,
    adding sqrt(2 epsilon / q).
    """
    if q <= 0:
        return math.inf
    return 2.0 + math.sqrt(2.0 * epsilon / q) / step


def fit_sinusoid(xs, values):
    """Least-squares fit of p + a sin 2x + b cos 2x via the normal equations.

    Returns the fitted payoff and the largest absolute residual.
    """
    xs = np.asarray(xs, dtype=np.float64).reshape(-1)
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if len(xs) != len(values):
        raise DomainError(f"{len(xs)} abscissa(s) for {len(values)} value(s)")
    design = np.column_stack([np.ones_like(xs), np.sin(2 * xs), np.cos(2 * xs)])
    if len(xs) < 3 or np.linalg.matrix_rank(design) < 3:
        raise RankDeficientError('need at least three samples with distinct x mod pi')
    coefficients = np.linalg.solve(design.T @ design, design.T @ values)
    residual = float(np.max(np.abs(design @ coefficients - values)))
    offset, sin_coeff, cos_coeff = (float(c) for c in coefficients)
    return SinusoidalPayoff(offset, sin_coeff, cos_coeff), residual
