"""Univariate moment problems solved through their sum-of-squares dual.

The primal problem maximizes Prob[Z >= 0] over distributions matching
M0 = 1, M1, M2 exactly, E[Z^3] >= L3 (optional) and E[Z^4] <= B4.  Its
dual searches for a quartic g(x) = sum y_r x^r dominating the indicator
of [0, inf), with objective y0 + y1 M1 + y2 M2 + y3 L3 + y4 B4, sign
constraints y3 <= 0 and y4 >= 0, and any feasible y giving a valid upper
bound on the primal value by weak duality.

Each half-line constraint (g - 1 >= 0 on x >= 0; g >= 0 on x <= 0 after
x -> -x) is certified by a single 5x5 positive semidefinite Gram matrix
through the substitution x = t^2: the even diagonal sums of the Gram
reproduce the polynomial coefficients while the odd sums vanish.

The solver output is only approximately feasible, so a restoration step
shifts the Gram blocks to exact positive semidefiniteness, reconciles
the coefficient identities with sign-safe diagonal corrections, and pays
for everything through y0.  The returned objective is then a sound upper
bound on the primal optimum up to floating-point evaluation error, and
every exported probability bound is additionally truncated downward to
six decimals.

The module also carries the two closed forms for the set {1,2,4}: the
exact value as a one-dimensional maximization over a scaling parameter
v, and the explicit approximation obtained at v = sqrt(2 M4 / (3 M2)).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from ._ipm import BlockSdp, IpmResult, solve as _ipm_solve
from .errors import ArgumentError, CertificateError
from .model import ShiftedMoments, s_of_xi, shifted_moments
from .numerics import maximize_scalar

__all__ = [
    "SET_124",
    "SET_1234",
    "MomentProblem",
    "DualSdp",
    "SdpSolution",
    "DualCertificate",
    "MomentBound",
    "assemble_dual_sdp",
    "solve_sdp",
    "restore_certificate",
    "verify_certificate",
    "closed_form_f2",
    "f3",
    "moment_bound",
    "floor_decimals",
]

SET_124: Tuple[int, ...] = (1, 2, 4)
SET_1234: Tuple[int, ...] = (1, 2, 3, 4)

# max over v of c*(-2 M1/v + 3 M2/v^2 - M4/v^4) with c = 4(2 sqrt(3)-3)/9
_F2_LEADING_CONSTANT = 4.0 * (2.0 * math.sqrt(3.0) - 3.0) / 9.0
_F2_V_BRACKET = (0.1, 100.0)

_PSD_MARGIN_REL = 1e-13
_IDENTITY_TOL = 1e-9
_INFLATION_LIMIT = 1e-4
_BOUND_DECIMALS = 6


def floor_decimals(x: float, digits: int) -> float:
    """Round toward -inf at a fixed number of decimals (keeps bounds valid)."""
    scale = 10.0**digits
    return math.floor(x * scale) / scale


@dataclass(frozen=True)
class MomentProblem:
    """Moment data plus the set of constrained orders ({1,2,4} or {1,2,3,4})."""

    moments: ShiftedMoments
    constraint_set: Tuple[int, ...]

    def __post_init__(self) -> None:
        cs = tuple(sorted(self.constraint_set))
        if cs not in (SET_124, SET_1234):
            raise ArgumentError(
                f"constraint_set must be {SET_124} or {SET_1234}, got {self.constraint_set}"
            )
        object.__setattr__(self, "constraint_set", cs)

    @property
    def has_third(self) -> bool:
        return 3 in self.constraint_set


@dataclass(frozen=True)
class DualSdp:
    """Assembled dual SDP in variance-normalized coordinates x' = x/sigma."""

    problem: MomentProblem
    sigma: float
    block: BlockSdp


@dataclass
class SdpSolution:
    """Solver output mapped back to original coordinates."""

    y: np.ndarray
    gram_plus: np.ndarray
    gram_minus: np.ndarray
    objective: float
    status: str
    iterations: int
    mu: float


@dataclass(frozen=True)
class DualCertificate:
    """Feasible dual point: polynomial coefficients plus PSD witnesses.

    gram_plus certifies g(x) - 1 >= 0 on x >= 0 and gram_minus certifies
    g(-x) >= 0 on x >= 0 (both via the x = t^2 substitution), so the
    objective upper-bounds the moment-problem optimum.
    """

    y: Tuple[float, ...]
    gram_plus: np.ndarray
    gram_minus: np.ndarray
    objective: float
    problem: MomentProblem
    residuals: Dict[str, float] = field(default_factory=dict)

    def polynomial(self, x: float) -> float:
        """Evaluate g(x) by Horner's rule."""
        acc = 0.0
        for c in reversed(self.y):
            acc = acc * x + c
        return acc

    def to_dict(self) -> dict:
        m = self.problem.moments
        return {
            "y": list(self.y),
            "gram_plus": self.gram_plus.tolist(),
            "gram_minus": self.gram_minus.tolist(),
            "objective": self.objective,
            "residuals": dict(self.residuals),
            "moments": {"M1": m.M1, "M2": m.M2, "L3": m.L3, "B4": m.B4,
                        "xi": m.xi, "D": m.D},
            "constraint_set": list(self.problem.constraint_set),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @staticmethod
    def from_dict(data: dict) -> "DualCertificate":
        m = data["moments"]
        problem = MomentProblem(
            moments=ShiftedMoments(M1=m["M1"], M2=m["M2"], L3=m["L3"],
                                   B4=m["B4"], xi=m["xi"], D=m["D"]),
            constraint_set=tuple(data["constraint_set"]),
        )
        return DualCertificate(
            y=tuple(data["y"]),
            gram_plus=np.array(data["gram_plus"]),
            gram_minus=np.array(data["gram_minus"]),
            objective=float(data["objective"]),
            problem=problem,
            residuals=dict(data["residuals"]),
        )


@dataclass(frozen=True)
class MomentBound:
    """Certified upper bound on Prob[Z >= 0] and its derived lower bound."""

    opt_upper: float
    certificate: DualCertificate
    gap: Optional[float] = None

    @property
    def prob_lower_bound(self) -> float:
        """Certified lower bound on Prob[Z < 0], truncated to 6 decimals."""
        return floor_decimals(1.0 - self.opt_upper, _BOUND_DECIMALS)


# ---------------------------------------------------------------------------
# Gram-matrix index patterns (basis 1, t, t^2, t^3, t^4)
# ---------------------------------------------------------------------------

_EVEN_IDX = (0, 2, 4)
_ODD_IDX = (1, 3)


def _even_pattern(order: int) -> np.ndarray:
    """Symmetric 0/1 matrix whose inner product with V gives the even sum."""
    E = np.zeros((5, 5))
    for i in range(5):
        j = 2 * order - i
        if 0 <= j <= 4:
            E[i, j] = 1.0
    return E


def _odd_pattern(order: int) -> np.ndarray:
    E = np.zeros((5, 5))
    for i in range(5):
        j = 2 * order - 1 - i
        if 0 <= j <= 4:
            E[i, j] = 1.0
    return E


def even_sums(V: np.ndarray) -> np.ndarray:
    """Polynomial coefficients carried by a Gram matrix: sum_{i+j=2l} v_ij."""
    return np.array([float(np.sum(V * _even_pattern(l))) for l in range(5)])


def odd_sums(V: np.ndarray) -> np.ndarray:
    """Residual odd-degree sums, zero for an exact half-line certificate."""
    return np.array([float(np.sum(V * _odd_pattern(l))) for l in range(1, 5)])


def _split_blocks(V: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Even/odd principal submatrices of an odd-sum-free Gram matrix."""
    G0 = V[np.ix_(_EVEN_IDX, _EVEN_IDX)].copy()
    G1 = V[np.ix_(_ODD_IDX, _ODD_IDX)].copy()
    return G0, G1


def _embed_blocks(G0: np.ndarray, G1: np.ndarray) -> np.ndarray:
    """Re-assemble a 5x5 Gram with exactly vanishing odd sums."""
    V = np.zeros((5, 5))
    V[np.ix_(_EVEN_IDX, _EVEN_IDX)] = G0
    V[np.ix_(_ODD_IDX, _ODD_IDX)] = G1
    return V


def _split_coeffs(G0: np.ndarray, G1: np.ndarray) -> np.ndarray:
    """Coefficients of the certified polynomial p(x) = m0' G0 m0 + x m1' G1 m1."""
    return np.array(
        [
            G0[0, 0],
            G1[0, 0] + 2.0 * G0[0, 1],
            G0[1, 1] + 2.0 * G1[0, 1] + 2.0 * G0[0, 2],
            G1[1, 1] + 2.0 * G0[1, 2],
            G0[2, 2],
        ]
    )


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


def assemble_dual_sdp(problem: MomentProblem) -> DualSdp:
    """Encode the dual as a block-diagonal SDP with equality constraints.

    Two 5x5 blocks certify the half-line constraints; a third 1x1 slack
    block realizes y3 <= 0 when the third moment is constrained.  The
    coordinates are rescaled by sigma = sqrt(M2) so the data stays O(1)
    across the whole operating range of D.
    """
    m = problem.moments
    sigma = math.sqrt(m.M2)
    moments_scaled = [
        1.0,
        m.M1 / sigma,
        m.M2 / sigma**2,
        m.L3 / sigma**3,
        m.B4 / sigma**4,
    ]

    third = problem.has_third
    sizes: Tuple[int, ...] = (5, 5, 1) if third else (5, 5)
    nb = len(sizes)

    constraints: List[Tuple[Optional[np.ndarray], ...]] = []
    rhs: List[float] = []

    def add(entries: Dict[int, np.ndarray], value: float) -> None:
        row: List[Optional[np.ndarray]] = [None] * nb
        for block_index, mat in entries.items():
            row[block_index] = mat
        constraints.append(tuple(row))
        rhs.append(value)

    # odd sums vanish on both Gram blocks
    for order in range(1, 5):
        add({0: _odd_pattern(order)}, 0.0)
        add({1: _odd_pattern(order)}, 0.0)
    # coefficient matching between the two half-line polynomials:
    #   p(x) = g(x) - 1,  q(x) = g(-x)
    add({1: _even_pattern(0), 0: -_even_pattern(0)}, 1.0)   # q0 - p0 = 1
    add({0: _even_pattern(1), 1: _even_pattern(1)}, 0.0)    # p1 + q1 = 0
    add({0: _even_pattern(2), 1: -_even_pattern(2)}, 0.0)   # p2 - q2 = 0
    add({0: _even_pattern(4), 1: -_even_pattern(4)}, 0.0)   # p4 - q4 = 0
    if third:
        add({0: _even_pattern(3), 1: _even_pattern(3)}, 0.0)      # p3 + q3 = 0
        add({0: _even_pattern(3), 2: np.ones((1, 1))}, 0.0)       # y3 = -slack <= 0
    else:
        add({0: _even_pattern(3)}, 0.0)
        add({1: _even_pattern(3)}, 0.0)

    # objective: y0 + y1 M1 + y2 M2 + y3 L3 + y4 B4 with y0 read from the
    # minus block and y1..y4 from the plus block
    cost_plus = sum(moments_scaled[l] * _even_pattern(l) for l in range(1, 5))
    cost_minus = _even_pattern(0).copy()
    cost: List[np.ndarray] = [cost_plus, cost_minus]
    if third:
        cost.append(np.zeros((1, 1)))

    block = BlockSdp(
        block_sizes=sizes,
        cost=tuple(cost),
        constraints=tuple(constraints),
        rhs=np.array(rhs),
    )
    return DualSdp(problem=problem, sigma=sigma, block=block)


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------


def solve_sdp(sdp: DualSdp, tol_mu: float = 1e-10, max_iter: int = 200) -> SdpSolution:
    """Run the embedded interior-point solver and unscale the result.

    A "maxiter"/"stalled" status is not fatal: the approximately feasible
    iterate still restores to a certified (if slightly weaker) bound.
    """
    result: IpmResult = _ipm_solve(sdp.block, tol_mu=tol_mu, max_iter=max_iter)
    scale = np.array([sdp.sigma ** (-0.5 * i) for i in range(5)])
    congruence = np.outer(scale, scale)
    gram_plus = result.X[0] * congruence
    gram_minus = result.X[1] * congruence

    ep = even_sums(gram_plus)
    em = even_sums(gram_minus)
    y = np.array([em[0], ep[1], ep[2], ep[3], ep[4]])
    return SdpSolution(
        y=y,
        gram_plus=gram_plus,
        gram_minus=gram_minus,
        objective=result.objective,
        status=result.status,
        iterations=result.iterations,
        mu=result.mu,
    )


# ---------------------------------------------------------------------------
# Restoration
# ---------------------------------------------------------------------------


def _psd_shift(G: np.ndarray) -> np.ndarray:
    """Shift a nearly-PSD block just above singularity."""
    margin = _PSD_MARGIN_REL * (1.0 + float(np.trace(np.abs(G))))
    lmin = float(np.linalg.eigvalsh(G)[0])
    if lmin < margin:
        G = G + (margin - lmin) * np.eye(G.shape[0])
    return G


def _match_odd_order(
    G0: np.ndarray, G1: np.ndarray, order: int, target: float
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Adjust one odd coefficient to ``target`` without losing PSD-ness.

    Upward moves use the dedicated G1 diagonal; downward moves perturb a
    G0 off-diagonal pair and return the spectral damage to be repaid by
    an even-only diagonal shift of G0.
    """
    coeffs = _split_coeffs(G0, G1)
    delta = target - coeffs[order]
    if delta >= 0.0:
        i = 0 if order == 1 else 1
        G1 = G1.copy()
        G1[i, i] += delta
        return G0, G1, 0.0
    G0 = G0.copy()
    if order == 1:
        G0[0, 1] += delta / 2.0
        G0[1, 0] += delta / 2.0
    else:
        G0[1, 2] += delta / 2.0
        G0[2, 1] += delta / 2.0
    return G0, G1, -delta / 2.0


def restore_certificate(
    y: np.ndarray, grams: Tuple[np.ndarray, np.ndarray], problem: MomentProblem
) -> DualCertificate:
    """Turn approximately feasible solver output into a sound certificate.

    Each Gram block is decoupled into its even/odd principal submatrices
    (which kills all odd sums exactly while preserving the certified
    coefficients), shifted to strict positive semidefiniteness, and then
    nudged so both half-line polynomials agree with a single coefficient
    vector y with y3 <= 0 and y4 >= 0.  All corrections either add to a
    diagonal or are repaid by an even-only diagonal shift, so exact
    PSD-ness is preserved by construction.  The objective of the
    restored y is a mathematically valid upper bound on the optimum.

    Raises CertificateError when restoration inflates the objective by
    more than 1e-4.
    """
    m = problem.moments
    V_plus, V_minus = grams
    reference_objective = float(
        y[0] + y[1] * m.M1 + y[2] * m.M2 + y[3] * m.L3 + y[4] * m.B4
    )

    G0p, G1p = _split_blocks(np.asarray(V_plus, float))
    G0m, G1m = _split_blocks(np.asarray(V_minus, float))
    G0p, G1p, G0m, G1m = map(_psd_shift, (G0p, G1p, G0m, G1m))

    # odd orders: block "minus" fixes the target, block "plus" follows
    b = _split_coeffs(G0m, G1m)
    y1 = -b[1]
    if problem.has_third:
        y3 = min(0.0, -b[3])
    else:
        y3 = 0.0

    damage_p = 0.0
    damage_m = 0.0
    G0p, G1p, d = _match_odd_order(G0p, G1p, 1, y1)
    damage_p += d
    G0p, G1p, d = _match_odd_order(G0p, G1p, 3, y3)
    damage_p += d
    G0m, G1m, d = _match_odd_order(G0m, G1m, 1, -y1)
    damage_m += d
    G0m, G1m, d = _match_odd_order(G0m, G1m, 3, -y3)
    damage_m += d
    # repay off-diagonal damage through even-only diagonal shifts (these touch
    # orders 0, 2, 4 but leave the just-matched odd orders untouched)
    if damage_p > 0.0:
        G0p = G0p + damage_p * (1.0 + 1e-6) * np.eye(3)
    if damage_m > 0.0:
        G0m = G0m + damage_m * (1.0 + 1e-6) * np.eye(3)

    # even orders: take the max of the two blocks and lift the other
    a = _split_coeffs(G0p, G1p)
    b = _split_coeffs(G0m, G1m)
    y0 = max(1.0 + a[0], b[0])
    y2 = max(a[2], b[2])
    y4 = max(a[4], b[4])
    for idx, (target_p, target_m) in (
        (0, (y0 - 1.0, y0)),
        (1, (y2, y2)),
        (2, (y4, y4)),
    ):
        order = (0, 2, 4)[idx]
        G0p = G0p.copy()
        G0p[idx, idx] += target_p - _split_coeffs(G0p, G1p)[order]
        G0m = G0m.copy()
        G0m[idx, idx] += target_m - _split_coeffs(G0m, G1m)[order]

    y_final = (float(y0), float(y1), float(y2), float(y3), float(y4))
    objective = float(
        y0 + y1 * m.M1 + y2 * m.M2 + y3 * m.L3 + y4 * m.B4
    )
    inflation = objective - reference_objective
    if inflation > _INFLATION_LIMIT:
        raise CertificateError(
            f"certificate degraded: restoration inflated the objective by {inflation:.3e}"
        )

    cert = DualCertificate(
        y=y_final,
        gram_plus=_embed_blocks(G0p, G1p),
        gram_minus=_embed_blocks(G0m, G1m),
        objective=objective,
        problem=problem,
        residuals={},
    )
    residuals = verify_certificate(cert)
    if residuals["max_identity_residual"] > _IDENTITY_TOL:
        raise CertificateError(
            f"certificate degraded: identity residual {residuals['max_identity_residual']:.3e}"
        )
    return replace(cert, residuals=residuals)


# ---------------------------------------------------------------------------
# Independent certificate verification
# ---------------------------------------------------------------------------


def psd_pivots(V: np.ndarray, zero_tol: float = 1e-14) -> List[float]:
    """Complete-pivoting Cholesky pivots; raises on an indefinite matrix.

    For a PSD matrix the greedy pivot sequence is nonnegative and any
    zero pivot forces its remaining row to vanish.
    """
    S = np.array(V, dtype=float)
    n = S.shape[0]
    scale = 1.0 + float(np.max(np.abs(S)))
    pivots: List[float] = []
    active = list(range(n))
    for _ in range(n):
        diag = [S[i, i] for i in active]
        k = active[int(np.argmax(diag))]
        piv = S[k, k]
        if piv < -zero_tol * scale:
            raise CertificateError(f"negative pivot {piv:.3e} in PSD check")
        pivots.append(float(piv))
        active.remove(k)
        if piv <= zero_tol * scale:
            row = max((abs(S[k, j]) for j in active), default=0.0)
            if row > math.sqrt(max(piv, 0.0)) * scale + zero_tol * scale:
                raise CertificateError("zero pivot with nonzero residual row")
            continue
        for i in active:
            for j in active:
                S[i, j] -= S[i, k] * S[k, j] / piv
    return pivots


def verify_certificate(
    cert: DualCertificate, n_points: int = 1000, seed: int = 7, span: float = 50.0
) -> Dict[str, float]:
    """Re-verify a certificate from scratch; returns the residual summary.

    Checks PSD-ness of both Gram blocks through pivoted factorizations,
    the linear identities tying Gram sums to the polynomial coefficients,
    and pointwise domination g(x) >= 1_{x>=0} on random samples.
    """
    y = np.asarray(cert.y)
    piv_plus = psd_pivots(cert.gram_plus)
    piv_minus = psd_pivots(cert.gram_minus)

    p_target = y - np.array([1.0, 0.0, 0.0, 0.0, 0.0])
    q_target = y * np.array([1.0, -1.0, 1.0, -1.0, 1.0])
    res = [
        float(np.max(np.abs(even_sums(cert.gram_plus) - p_target))),
        float(np.max(np.abs(even_sums(cert.gram_minus) - q_target))),
        float(np.max(np.abs(odd_sums(cert.gram_plus)))),
        float(np.max(np.abs(odd_sums(cert.gram_minus)))),
    ]

    rng = np.random.default_rng(seed)
    xs = rng.uniform(-span, span, size=n_points)
    worst = math.inf
    for x in xs:
        gap = cert.polynomial(float(x)) - (1.0 if x >= 0 else 0.0)
        worst = min(worst, gap)

    lmin = min(
        float(np.linalg.eigvalsh(cert.gram_plus)[0]),
        float(np.linalg.eigvalsh(cert.gram_minus)[0]),
    )
    return {
        "max_identity_residual": max(res),
        "min_psd_pivot": min(piv_plus + piv_minus),
        "min_eigenvalue": lmin,
        "min_pointwise_gap": worst,
        "sign_y3": float(y[3]),
        "sign_y4": float(y[4]),
    }


# ---------------------------------------------------------------------------
# Closed forms for the {1,2,4} moment set
# ---------------------------------------------------------------------------


def closed_form_f2(xi: float, D: float) -> float:
    """Exact lower bound on Prob[Z < 0] for the {1,2,4} problem.

    Maximizes c * (-2 M1 / v + 3 M2 / v^2 - M4 / v^4) over v > 0 with
    c = 4 (2 sqrt(3) - 3) / 9; every v gives a valid bound and the best
    one matches the SDP value.
    """
    m = shifted_moments(xi, D)

    def objective(v: float) -> float:
        return _F2_LEADING_CONSTANT * (
            -2.0 * m.M1 / v + 3.0 * m.M2 / v**2 - m.B4 / v**4
        )

    _, best = maximize_scalar(objective, *_F2_V_BRACKET, tol=1e-9)
    return best


def f3(xi: float, D: float) -> float:
    """Explicit approximate bound obtained at v = sqrt(2 M4 / (3 M2)).

    Always at most closed_form_f2; its D -> inf limit at xi = 0.2
    reproduces the 1/8 bound after the exp(-xi) factor.
    """
    if not (0 < xi <= 1):
        raise ArgumentError(f"xi must lie in (0, 1], got {xi}")
    if not D > 0:
        raise ArgumentError(f"D must be positive, got {D}")
    s = max(5.0, 1.0 / xi**2 - 4.0 / xi, 1.0 / xi**2 - 8.0 / xi + 5.0)
    m4 = 3.0 * D * D + (6.0 + s) * D * xi * xi + xi**4
    return _F2_LEADING_CONSTANT * (
        math.sqrt(6.0 * (D * xi * xi + xi**4) / m4)
        + 2.25 * (D + xi * xi) ** 2 / m4
    )


# ---------------------------------------------------------------------------
# End-to-end bound computation
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _moment_bound_cached(
    xi: float, D: float, constraint_set: Tuple[int, ...], m3_mode: str, s: Optional[float]
) -> MomentBound:
    problem = MomentProblem(
        moments=shifted_moments(xi, D, m3_mode=m3_mode, s=s),
        constraint_set=constraint_set,
    )
    sdp = assemble_dual_sdp(problem)
    solution = solve_sdp(sdp)
    cert = restore_certificate(
        solution.y, (solution.gram_plus, solution.gram_minus), problem
    )
    opt_upper = min(1.0, cert.objective)
    return MomentBound(opt_upper=opt_upper, certificate=cert)


def moment_bound(
    xi: float,
    D: float,
    constraint_set: Tuple[int, ...] = SET_124,
    m3_mode: str = "basic",
    s: Optional[float] = None,
) -> MomentBound:
    """Certified moment bound at (xi, D) for the given constraint set.

    The returned ``prob_lower_bound`` is 1 - opt_upper truncated downward,
    so it stays a valid lower bound on Prob[sum Y_i <= xi].
    """
    cs = tuple(sorted(constraint_set))
    if cs == SET_124 and m3_mode != "basic":
        raise ArgumentError("the {1,2,4} set has no third-moment constraint to refine")
    return _moment_bound_cached(float(xi), float(D), cs, m3_mode, s)


def clear_caches() -> None:
    """Drop memoized SDP solves (used by timing-sensitive callers)."""
    _moment_bound_cached.cache_clear()
