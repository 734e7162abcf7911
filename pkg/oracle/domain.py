from dataclasses import dataclass


@dataclass(frozen=True)
class NashCertificate:
    """Grid evidence that no unilateral deviation gains more than epsilon."""

    epsilon: float
    grid_n: int
    max_unilateral_gain: tuple
    passed: bool
    checked_point: tuple
    effective_epsilon: float = None

    @property
    def worst_gain(self):
        return max(self.max_unilateral_gain)

    def combine(self, other):
        """Worst-case merge, used for certificates over several sampled points."""
        if self.worst_gain >= other.worst_gain:
            worst = self
        else:
            worst = other
        return NashCertificate(
            epsilon=self.epsilon,
            grid_n=self.grid_n,
            max_unilateral_gain=tuple(
                max(a, b) for a, b in zip(self.max_unilateral_gain, other.max_unilateral_gain)
            ),
            passed=self.passed and other.passed,
            checked_point=worst.checked_point,
            effective_epsilon=worst.effective_epsilon,
        )
