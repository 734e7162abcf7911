import math
from dataclasses import dataclass, field

import numpy as np

from game_a.domain import GameAParams

ADMISSIBLE_ALPHA_TOL = 1e-12
DEGENERATE_Q_TOL = 1e-12


@dataclass(frozen=True)
class SinusoidalPayoff:
    """f(x) = offset + sin_coeff sin 2x + cos_coeff cos 2x, x the total physical angle."""

    offset: float
    sin_coeff: float
    cos_coeff: float
    alpha_tol: float = ADMISSIBLE_ALPHA_TOL
    degenerate_tol: float = DEGENERATE_Q_TOL

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        value = self.offset + self.sin_coeff * np.sin(2 * x) + self.cos_coeff * np.cos(2 * x)
        return float(value) if np.ndim(value) == 0 else value

    @property
    def amplitude(self):
        return math.hypot(self.sin_coeff, self.cos_coeff)

    @property
    def admissible(self):
        # a constant payoff is an instance with q = 0 whatever the sign of its noise
        return self.is_degenerate() or self.sin_coeff >= -self.alpha_tol

    @property
    def phase(self):
        """atan2(cos_coeff, sin_coeff); in [-pi/2, pi/2] exactly when admissible.

        Coefficients within ``alpha_tol`` of zero count as zero.
        """
        sin_coeff = max(self.sin_coeff, 0.0) if self.admissible else self.sin_coeff
        cos_coeff = 0.0 if abs(self.cos_coeff) <= self.alpha_tol else self.cos_coeff
        return math.atan2(cos_coeff, sin_coeff)

    def is_degenerate(self, tol=None):
        return self.amplitude <= (self.degenerate_tol if tol is None else tol)

    def as_dict(self):
        return {
            'offset': self.offset,
            'sin_coeff': self.sin_coeff,
            'cos_coeff': self.cos_coeff,
            'q': self.amplitude,
            'psi': self.phase,
            'admissible': self.admissible,
            'degenerate': self.is_degenerate(),
        }


@dataclass(frozen=True)
class FormulaResidual:
    """Deviation of one closed-form coefficient from the trace oracle.

    ``source`` is 'derived' for formulas that reproduce the trace and
    'printed' for the published assignments kept for comparison.
    """

    name: str
    player: int
    source: str
    formula: str
    value: float
    oracle: float

    @property
    def residual(self):
        return abs(self.value - self.oracle)


@dataclass(frozen=True, eq=False)
class ReductionReport:
    model: str
    game: object
    sinusoids: tuple
    params: GameAParams = None
    angle_scale: float = 2.0
    residuals: tuple = field(default_factory=tuple)
    aggregates: dict = field(default_factory=dict)
    non_triviality: object = None
    mixing: float = None

    @property
    def admissible(self):
        return tuple(s.admissible for s in self.sinusoids)

    @property
    def inadmissible_players(self):
        return tuple(player for player, ok in enumerate(self.admissible, start=1) if not ok)

    @property
    def degenerate_players(self):
        return tuple(player for player, s in enumerate(self.sinusoids, start=1) if s.is_degenerate())

    def flagged_residuals(self, tol=1e-9):
        return [r for r in self.residuals if r.residual > tol]

    def physical_payoff(self, theta, phi, player):
        """Payoff through the extracted sinusoid; valid for inadmissible players too."""
        return self.sinusoids[player - 1](np.asarray(theta) + np.asarray(phi))
