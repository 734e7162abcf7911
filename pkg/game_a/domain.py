import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from oracle.domain import NashCertificate
from qmatrix.exceptions import DomainError

HALF_PI = math.pi / 2
DEGENERATE_Q_TOL = 1e-12
PHASE_SLACK = 1e-12


@dataclass(frozen=True)
class GameAParams:
    """Payoffs f_i(theta, phi) = p_i + q_i sin(theta + phi + psi_i) on [0, pi/2]^2."""

    p1: float
    q1: float
    psi1: float
    p2: float
    q2: float
    psi2: float
    degenerate_tol: float = DEGENERATE_Q_TOL

    def __post_init__(self):
        for player in (1, 2):
            q, psi = self.amplitude(player), self.phase(player)
            if not all(math.isfinite(v) for v in (self.offset(player), q, psi)):
                raise DomainError(f"player {player} parameters must be finite")
            if q < 0:
                raise DomainError(f"q{player} = {q} must be non-negative")
            if abs(psi) > HALF_PI + PHASE_SLACK:
                raise DomainError(f"psi{player} = {psi} outside [-pi/2, pi/2]")
            # fold rounding slack back onto the band
            object.__setattr__(self, f'psi{player}', min(max(psi, -HALF_PI), HALF_PI))

    @classmethod
    def from_phases(cls, psi1, psi2, q1=1.0, q2=1.0, p1=0.0, p2=0.0):
        return cls(p1=p1, q1=q1, psi1=psi1, p2=p2, q2=q2, psi2=psi2)

    def offset(self, player):
        return self.p1 if player == 1 else self.p2

    def amplitude(self, player):
        return self.q1 if player == 1 else self.q2

    def phase(self, player):
        return self.psi1 if player == 1 else self.psi2

    def is_degenerate(self, player):
        return self.amplitude(player) <= self.degenerate_tol

    @property
    def degenerate_players(self):
        return frozenset(player for player in (1, 2) if self.is_degenerate(player))

    @property
    def max_amplitude(self):
        return max(self.q1, self.q2)


class SolutionKind(str, Enum):
    UNIQUE = 'unique'
    CONTINUUM = 'continuum'
    DEGENERATE = 'degenerate'


@dataclass(frozen=True)
class NashSolution:
    """Unique point, continuum segment theta + phi = angle_sum, or degenerate outcome.

    Angles are in GAME A units unless ``scale`` is not 1, in which case they
    were divided by ``scale`` (physical angles use scale 2).
    """

    kind: SolutionKind
    theta: float = None
    phi: float = None
    case: int = None
    psi: float = None
    theta_lo: float = None
    theta_hi: float = None
    angle_sum: float = None
    degenerate_players: frozenset = field(default_factory=frozenset)
    note: str = ''
    scale: float = 1.0
    certificate: NashCertificate = None

    @classmethod
    def unique(cls, theta, phi, case):
        return cls(SolutionKind.UNIQUE, theta=theta, phi=phi, case=case)

    @classmethod
    def continuum(cls, psi, theta_lo, theta_hi):
        return cls(
            SolutionKind.CONTINUUM,
            psi=psi,
            theta_lo=theta_lo,
            theta_hi=theta_hi,
            angle_sum=HALF_PI - psi,
        )

    @classmethod
    def degenerate(cls, players, note):
        return cls(SolutionKind.DEGENERATE, degenerate_players=frozenset(players), note=note)

    @property
    def point(self):
        if self.kind is not SolutionKind.UNIQUE:
            return None
        return (self.theta, self.phi)

    def points(self, samples=11):
        """Equilibrium points: the unique point, or samples along the segment."""
        if self.kind is SolutionKind.UNIQUE:
            return [self.point]
        if self.kind is SolutionKind.CONTINUUM:
            thetas = np.linspace(self.theta_lo, self.theta_hi, samples)
            phis = np.clip(self.angle_sum - thetas, 0.0, HALF_PI / self.scale)
            return [(float(t), float(p)) for t, p in zip(thetas, phis)]
        return []

    def scaled(self, factor):
        """Divide every angle by ``factor`` (GAME A angle 2x -> physical angle x)."""
        def div(value):
            return None if value is None else value / factor

        return replace(
            self,
            theta=div(self.theta),
            phi=div(self.phi),
            theta_lo=div(self.theta_lo),
            theta_hi=div(self.theta_hi),
            angle_sum=div(self.angle_sum),
            scale=self.scale * factor,
            certificate=None,
        )

    def with_certificate(self, certificate):
        return replace(self, certificate=certificate)


@dataclass(frozen=True)
class IterationRecord:
    trajectory: tuple
    converged: bool
    point: tuple
    rounds: int
    cycle_length: int = 0
    certificate: NashCertificate = None

    @property
    def cycled(self):
        return self.cycle_length > 0
