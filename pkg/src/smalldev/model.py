"""Two-point random variables, instance statistics, and moment bounds.

A mean-zero variable Y on {-a, b} has Prob[Y=-a] = b/(a+b) and
Prob[Y=b] = a/(a+b).  An instance is a finite list of such independent
variables together with the deviation level xi; its derived statistics
are

    D   = sum a_i b_i                       (variance of the sum)
    T_B = sum a_i b_i (a_i^2+b_i^2)/(a_i+b_i)   (sum of E|Y_i|^3)
    T_M = sum a_i b_i (a_i - b_i)           (negated sum of E[Y_i^3])

The shifted variable Z = sum Y_i - xi has M1 = -xi, M2 = D + xi^2, a
third-moment lower bound L3 and a fourth-moment upper bound B4 derived
here in closed form.  ``truncate_partition`` reduces raw lower-bounded
variables to this normal form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

from .errors import ArgumentError

__all__ = [
    "TwoPointVar",
    "Instance",
    "InstanceStats",
    "ShiftedMoments",
    "TruncationResult",
    "stats",
    "s_of_xi",
    "shifted_moments",
    "truncate_partition",
]

_VALIDATION_SLACK = 1e-12


@dataclass(frozen=True)
class TwoPointVar:
    """Mean-zero variable on {-a, b}; a = b = 0 degenerates to Y == 0."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ArgumentError("support points must be finite")
        if self.a < 0 or self.b < 0:
            raise ArgumentError(f"support magnitudes must be nonnegative: ({self.a}, {self.b})")
        if self.b > 1 + _VALIDATION_SLACK:
            raise ArgumentError(f"b must not exceed 1 (post-truncation normal form), got {self.b}")

    @property
    def degenerate(self) -> bool:
        return self.a + self.b == 0.0

    @property
    def prob_neg(self) -> float:
        """Prob[Y = -a]; a degenerate variable carries all mass at 0."""
        if self.degenerate:
            return 1.0
        return self.b / (self.a + self.b)

    @property
    def prob_pos(self) -> float:
        """Prob[Y = b]."""
        if self.degenerate:
            return 0.0
        return self.a / (self.a + self.b)

    def abs_third_moment(self) -> float:
        """E|Y|^3 = a b (a^2 + b^2) / (a + b)."""
        if self.degenerate:
            return 0.0
        return self.a * self.b * (self.a * self.a + self.b * self.b) / (self.a + self.b)


@dataclass(frozen=True)
class Instance:
    """Independent two-point variables with deviation level xi in (0, 1]."""

    vars: Tuple[TwoPointVar, ...]
    xi: float

    def __post_init__(self) -> None:
        if not (0 < self.xi <= 1):
            raise ArgumentError(f"xi must lie in (0, 1], got {self.xi}")
        object.__setattr__(self, "vars", tuple(self.vars))
        for i, v in enumerate(self.vars):
            if v.a > self.xi + _VALIDATION_SLACK:
                raise ArgumentError(
                    f"var {i}: a={v.a} exceeds xi={self.xi}"
                )

    def __len__(self) -> int:
        return len(self.vars)

    def to_dict(self) -> dict:
        return {"xi": self.xi, "vars": [{"a": v.a, "b": v.b} for v in self.vars]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @staticmethod
    def from_dict(data: dict) -> "Instance":
        return Instance(
            vars=tuple(TwoPointVar(d["a"], d["b"]) for d in data["vars"]),
            xi=float(data["xi"]),
        )

    @staticmethod
    def from_json(text: str) -> "Instance":
        return Instance.from_dict(json.loads(text))


@dataclass(frozen=True)
class InstanceStats:
    """Closed-form sums over an instance: variance and third-moment terms."""

    D: float
    T_B: float
    T_M: float


def stats(instance: Instance) -> InstanceStats:
    """Exact D, T_B, T_M; degenerate variables contribute nothing."""
    D = 0.0
    t_b = 0.0
    t_m = 0.0
    for v in instance.vars:
        if v.degenerate:
            continue
        ab = v.a * v.b
        D += ab
        t_b += ab * (v.a * v.a + v.b * v.b) / (v.a + v.b)
        t_m += ab * (v.a - v.b)
    return InstanceStats(D=D, T_B=t_b, T_M=t_m)


def s_of_xi(xi: float) -> float:
    """Worst-case per-variable fourth-moment excess, maximized at a corner.

    The quantity a^2 + b^2 - 4ab - 4 xi (b - a) is convex in each of a, b
    separately, so its maximum over [0, xi] x [0, 1] sits at one of the
    four corners, whose values are 0, 5 xi^2, 1 - 4 xi and
    5 xi^2 - 8 xi + 1.
    """
    if not (0 < xi <= 1):
        raise ArgumentError(f"xi must lie in (0, 1], got {xi}")
    return max(0.0, 5 * xi * xi, 1 - 4 * xi, 5 * xi * xi - 8 * xi + 1)


@dataclass(frozen=True)
class ShiftedMoments:
    """Moment data of Z = sum Y_i - xi: equalities M1, M2 and bounds L3, B4."""

    M1: float
    M2: float
    L3: float
    B4: float
    xi: float
    D: float


def shifted_moments(
    xi: float,
    D: float,
    m3_mode: str = "basic",
    s: Optional[float] = None,
) -> ShiftedMoments:
    """Moment bounds for Z given (xi, D).

    m3_mode "basic" uses L3 = -xi^3 - 4 xi D, valid for any instance.
    m3_mode "refined" assumes the absolute third-moment ratio T_B = s D
    and tightens L3 to -xi^3 - 5 xi D + s D when s >= xi; below xi the
    joint constraint is no longer effective and the basic bound applies.
    """
    if not (0 < xi <= 1):
        raise ArgumentError(f"xi must lie in (0, 1], got {xi}")
    if not D > 0:
        raise ArgumentError(f"D must be positive, got {D}")
    if m3_mode not in ("basic", "refined"):
        raise ArgumentError(f"unknown m3_mode {m3_mode!r}")
    if m3_mode == "refined":
        if s is None or not (0 < s <= 1):
            raise ArgumentError(f"refined mode needs a ratio s in (0, 1], got {s}")

    basic_l3 = -xi**3 - 4 * xi * D
    if m3_mode == "refined" and s >= xi:
        l3 = -xi**3 - 5 * xi * D + s * D
    else:
        l3 = basic_l3
    b4 = 3 * D * D + 6 * xi * xi * D + xi**4 + s_of_xi(xi) * D
    return ShiftedMoments(M1=-xi, M2=D + xi * xi, L3=l3, B4=b4, xi=xi, D=D)


@dataclass(frozen=True)
class TruncationResult:
    """Outcome of the truncation/partition reduction."""

    A: Tuple[int, ...]
    B: Tuple[int, ...]
    a_sum: float
    instance: Instance


def truncate_partition(
    raw: Sequence[Tuple[float, float]], tau: float
) -> TruncationResult:
    """Split raw lower-bounded two-point variables and rescale the rest.

    ``raw`` holds pairs (a, b) with 0 < a <= 1 and b > 0 describing
    mean-zero X on {-a, b}.  Sorting by b descending (ties by original
    index), N is the largest k with b_(k) >= tau * sum of the k largest
    a's; indices A carry the all-negative event whose mass is at least
    exp(-1/tau), and the remaining indices B are rescaled to
    Y = X / (tau (a_sum + 1)), which satisfies -1/tau <= Y <= 1.  The
    returned instance has xi = 1/tau.
    """
    if not tau > 1:
        raise ArgumentError(f"tau must exceed 1, got {tau}")
    pairs = list(raw)
    for i, (a, b) in enumerate(pairs):
        if not (0 < a <= 1) or not b > 0:
            raise ArgumentError(
                f"raw pair {i} must satisfy 0 < a <= 1 and b > 0, got ({a}, {b})"
            )

    order = sorted(range(len(pairs)), key=lambda i: (-pairs[i][1], i))
    n_large = 0
    prefix_a = 0.0
    for rank, idx in enumerate(order, start=1):
        a, b = pairs[idx]
        prefix_a += a
        if b >= tau * prefix_a:
            n_large = rank
    group_a = tuple(order[:n_large])
    group_b = tuple(sorted(order[n_large:]))
    a_sum = sum(pairs[i][0] for i in group_a)

    scale = 1.0 / (tau * (a_sum + 1.0))
    xi = 1.0 / tau
    transformed = tuple(
        TwoPointVar(a=pairs[i][0] * scale, b=pairs[i][1] * scale) for i in group_b
    )
    return TruncationResult(
        A=group_a,
        B=group_b,
        a_sum=a_sum,
        instance=Instance(vars=transformed, xi=xi),
    )
