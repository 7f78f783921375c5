"""Oracle cost model ``T(|S|) = C + |S|**r`` and the derived run-time totals."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CostModel:
    C: float = 0.0
    r: float = 1.5

    def __post_init__(self):
        if self.C < 0 or self.r <= 0:
            raise ValueError("cost model needs C >= 0 and r > 0")

    def T(self, size: int) -> float:
        return self.C + float(size) ** self.r

    @classmethod
    def matched(cls, m: int, r: float = 1.5, fraction: float = 1e-3) -> "CostModel":
        """C chosen so that ``C == fraction * T(m)``."""
        return cls(C=fraction * m ** r / (1.0 - fraction), r=r)


def gamma_es(k: int, n: int, m: int, cost: CostModel) -> float:
    """Model-time of ``k`` full single-piece solves."""
    if k > n:
        raise ValueError("k cannot exceed n")
    return k * cost.T(m)


def gamma_ulo(h_final: int, phase_b_sizes, n: int, m: int, cost: CostModel) -> float:
    """Closed-form ULO model-time.

    ``phase_b_sizes`` lists ``(|H_k|, |S_k|)`` for every completed phase (b).
    """
    total = h_final * cost.T(m)
    for h, s in phase_b_sizes:
        total += (n - h) * cost.T(s)
    return total


def upsilon(gamma_ulo_value: float, n: int, m: int, cost: CostModel) -> float:
    return gamma_ulo_value / gamma_es(n, n, m, cost)
