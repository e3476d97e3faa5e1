"""Deterministic scalar kernels: normal CDF, 1-D maximization, bisection.

All routines here are pure functions of their inputs and hold no global
state, so they are safe to call concurrently.  The standard normal CDF is
evaluated through a rational erfc approximation (Cody's method) rather
than an external math library, which keeps the accuracy contract
(absolute error below 1e-10, monotone in the sampled sense) testable
against an independent series oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

from .errors import ArgumentError, NoCrossingError, NumericalError

__all__ = [
    "Tolerances",
    "std_normal_cdf",
    "maximize_scalar",
    "bisect_crossing",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_PI = 0.5641895835477562869480794515607726  # 1/sqrt(pi)


@dataclass(frozen=True)
class Tolerances:
    """Default numerical tolerances used across the package."""

    abs_fn_tol: float = 1e-10
    bisect_x_tol: float = 1e-7
    scalar_opt_tol: float = 1e-9

    def __post_init__(self) -> None:
        for name in ("abs_fn_tol", "bisect_x_tol", "scalar_opt_tol"):
            if not getattr(self, name) > 0:
                raise ArgumentError(f"{name} must be strictly positive")


DEFAULT_TOLERANCES = Tolerances()


# Rational minimax coefficients for erf/erfc (W. J. Cody, Math. Comp. 23,
# 1969; SPECFUN).  Three regimes: small |z| via erf, central via scaled
# erfc, large z via the asymptotic expansion of exp(z^2) z erfc(z).
_ERF_A = (
    3.16112374387056560e00,
    1.13864154151050156e02,
    3.77485237685302021e02,
    3.20937758913846947e03,
    1.85777706184603153e-1,
)
_ERF_B = (
    2.36012909523441209e01,
    2.44024637934444173e02,
    1.28261652607737228e03,
    2.84423683343917062e03,
)
_ERFC_C = (
    5.64188496988670089e-1,
    8.88314979438837594e00,
    6.61191906371416295e01,
    2.98635138197400131e02,
    8.81952221241769090e02,
    1.71204761263407058e03,
    2.05107837782607147e03,
    1.23033935479799725e03,
    2.15311535474403846e-8,
)
_ERFC_D = (
    1.57449261107098347e01,
    1.17693950891312499e02,
    5.37181101862009858e02,
    1.62138957456669019e03,
    3.29079923573345963e03,
    4.36261909014324716e03,
    3.43936767414372164e03,
    1.23033935480374942e03,
)
_ERFC_P = (
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
)
_ERFC_Q = (
    2.56852019228982242e00,
    1.87295284992346047e00,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
)

_ERF_THRESHOLD = 0.46875
_ERFC_XBIG = 26.543


def _erf_small(z: float) -> float:
    """erf(z) for |z| <= 0.46875."""
    zz = z * z
    num = _ERF_A[4] * zz
    den = zz
    for i in range(3):
        num = (num + _ERF_A[i]) * zz
        den = (den + _ERF_B[i]) * zz
    return z * (num + _ERF_A[3]) / (den + _ERF_B[3])


def _erfc_tail(y: float) -> float:
    """erfc(y) for y >= 0.46875."""
    if y > _ERFC_XBIG:
        return 0.0
    if y <= 4.0:
        num = _ERFC_C[8] * y
        den = y
        for i in range(7):
            num = (num + _ERFC_C[i]) * y
            den = (den + _ERFC_D[i]) * y
        result = (num + _ERFC_C[7]) / (den + _ERFC_D[7])
    else:
        zz = 1.0 / (y * y)
        num = _ERFC_P[5] * zz
        den = zz
        for i in range(4):
            num = (num + _ERFC_P[i]) * zz
            den = (den + _ERFC_Q[i]) * zz
        result = zz * (num + _ERFC_P[4]) / (den + _ERFC_Q[4])
        result = (_INV_SQRT_PI - result) / y
    # split exp(-y^2) to avoid cancellation in the exponent
    ysq = math.floor(y * 16.0) / 16.0
    delta = (y - ysq) * (y + ysq)
    return math.exp(-ysq * ysq) * math.exp(-delta) * result


def _erfc(z: float) -> float:
    """Complementary error function on the whole real line."""
    az = abs(z)
    if az <= _ERF_THRESHOLD:
        return 1.0 - _erf_small(z)
    tail = _erfc_tail(az)
    return tail if z > 0.0 else 2.0 - tail


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF, absolute error below 1e-10.

    Raises ArgumentError for non-finite input.
    """
    if not math.isfinite(x):
        raise ArgumentError(f"std_normal_cdf requires finite input, got {x!r}")
    return 0.5 * _erfc(-x / _SQRT2)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_COARSE_GRID_POINTS = 200


def maximize_scalar(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = DEFAULT_TOLERANCES.scalar_opt_tol,
) -> Tuple[float, float]:
    """Maximize a scalar function on [lo, hi]; returns (x*, f(x*)).

    A 200-point coarse grid brackets the maximum, then golden-section
    search refines to ``tol``.  Deterministic for fixed inputs.  Intended
    for smooth objectives with a single interior maximum; the grid guards
    against missed brackets.
    """
    if not (lo < hi):
        raise ArgumentError(f"invalid bracket [{lo}, {hi}]")
    if tol <= 0:
        raise ArgumentError("tol must be positive")

    step = (hi - lo) / (_COARSE_GRID_POINTS - 1)
    xs = [lo + i * step for i in range(_COARSE_GRID_POINTS)]
    xs[-1] = hi
    fs = [f(x) for x in xs]
    if any(math.isnan(v) for v in fs):
        raise NumericalError("objective returned NaN on the coarse grid")
    ibest = max(range(len(xs)), key=lambda i: fs[i])
    best_x, best_f = xs[ibest], fs[ibest]

    a = xs[max(ibest - 1, 0)]
    b = xs[min(ibest + 1, len(xs) - 1)]
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    for x, v in ((c, fc), (d, fd)):
        if v > best_f:
            best_x, best_f = x, v
    return best_x, best_f


_MONOTONE_SAMPLES = 9
_MONOTONE_SLACK = 1e-9


def bisect_crossing(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = DEFAULT_TOLERANCES.bisect_x_tol,
) -> float:
    """Locate the sign change of a monotone function on [lo, hi].

    The caller guarantees monotonicity; a 9-point sampled check asserts
    it (slack 1e-9) before bisection narrows the bracket to width
    ``tol``.  Raises NoCrossingError when g(lo) and g(hi) have the same
    sign.
    """
    if not (lo < hi):
        raise ArgumentError(f"invalid bracket [{lo}, {hi}]")
    if tol <= 0:
        raise ArgumentError("tol must be positive")
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if (glo > 0) == (ghi > 0):
        raise NoCrossingError(
            f"no sign change on [{lo}, {hi}]: g(lo)={glo:.6g}, g(hi)={ghi:.6g}"
        )

    samples = [glo]
    for i in range(1, _MONOTONE_SAMPLES - 1):
        samples.append(g(lo + (hi - lo) * i / (_MONOTONE_SAMPLES - 1)))
    samples.append(ghi)
    increasing = ghi > glo
    for prev, cur in zip(samples, samples[1:]):
        drift = cur - prev if increasing else prev - cur
        if drift < -_MONOTONE_SLACK:
            raise NumericalError(
                "sampled monotonicity check failed; bisection would be unsound"
            )

    a, b, ga = lo, hi, glo
    while b - a > tol:
        mid = 0.5 * (a + b)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0) == (ga > 0):
            a, ga = mid, gm
        else:
            b = mid
    return 0.5 * (a + b)
