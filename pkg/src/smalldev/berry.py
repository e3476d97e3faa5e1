"""Normal-approximation lower bounds for Prob[sum Y_i <= xi].

With D = Var(sum Y_i) and psi_0 the normalized absolute third moment,
the uniform CDF distance to the standard normal is at most c0 * psi_0
with c0 = 0.56 (Shevtsova's constant).  For variables bounded by 1 this
yields the lower bound

    f1(xi, D) = Phi(xi / sqrt(D)) - 0.56 / sqrt(D),

and, when the absolute third-moment sum T_B is known,

    f1_hat(xi, D, T_B) = Phi(xi / sqrt(D)) - 0.56 * T_B / D^(3/2).

Raw values are clamped to [0, 1] at the API boundary so callers always
receive valid probability bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import ArgumentError
from .numerics import std_normal_cdf

__all__ = [
    "BERRY_ESSEEN_C0",
    "BerryEsseenParams",
    "generic_upper",
    "f1",
    "f1_hat",
]

# Load-bearing for every headline bound; override only via the explicit
# unsafe_c0 keyword.
BERRY_ESSEEN_C0 = 0.56

_TB_SLACK = 1e-12


@dataclass(frozen=True)
class BerryEsseenParams:
    """Constant, uniform variable bound, and third-moment cap in one record."""

    K: float
    psi0_cap: float
    c0: float = BERRY_ESSEEN_C0

    def __post_init__(self) -> None:
        if not self.K > 0:
            raise ArgumentError(f"K must be positive, got {self.K}")
        if self.psi0_cap < 0:
            raise ArgumentError(f"psi0_cap must be nonnegative, got {self.psi0_cap}")
        if not self.c0 > 0:
            raise ArgumentError(f"c0 must be positive, got {self.c0}")


def _c0(unsafe_c0: Optional[float]) -> float:
    if unsafe_c0 is None:
        return BERRY_ESSEEN_C0
    if not unsafe_c0 > 0:
        raise ArgumentError(f"unsafe_c0 must be positive, got {unsafe_c0}")
    return unsafe_c0


def generic_upper(K: float, D: float, *, unsafe_c0: Optional[float] = None) -> float:
    """Upper bound 0.5 + c0 K / sqrt(D) on Prob[sum X_i >= 0], capped at 1."""
    if not K > 0:
        raise ArgumentError(f"K must be positive, got {K}")
    if not D > 0:
        raise ArgumentError(f"D must be positive, got {D}")
    return min(1.0, 0.5 + _c0(unsafe_c0) * K / math.sqrt(D))


def f1_hat(
    xi: float, D: float, t_b: float, *, unsafe_c0: Optional[float] = None
) -> float:
    """Lower bound on Prob[sum Y_i <= xi] given the third-moment sum T_B."""
    if not (0 < xi <= 1):
        raise ArgumentError(f"xi must lie in (0, 1], got {xi}")
    if not D > 0:
        raise ArgumentError(f"D must be positive, got {D}")
    if t_b < 0 or t_b > D * (1 + _TB_SLACK):
        raise ArgumentError(
            f"T_B={t_b} outside [0, D={D}]; the |Y_i| <= 1 regime requires T_B <= D"
        )
    raw = std_normal_cdf(xi / math.sqrt(D)) - _c0(unsafe_c0) * t_b / D**1.5
    return min(1.0, max(0.0, raw))


def f1(xi: float, D: float, *, unsafe_c0: Optional[float] = None) -> float:
    """Lower bound on Prob[sum Y_i <= xi] for variables bounded by 1.

    Equals f1_hat with T_B = D, the worst case allowed by |Y_i| <= 1.
    """
    return f1_hat(xi, D, D, unsafe_c0=unsafe_c0)
