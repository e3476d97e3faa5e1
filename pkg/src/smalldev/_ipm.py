"""Embedded primal-dual interior-point solver for tiny block-diagonal SDPs.

Solves   min sum_j <C_j, X_j>   s.t.  sum_j <A_kj, X_j> = b_k,  X_j psd,

with Nesterov-Todd scaling and an adaptive centering parameter chosen
from an affine predictor step.  All blocks in this package are at most
5x5 with at most ~16 equality constraints, so dense linear algebra is
used throughout and robustness is preferred over scalability.  The
iteration is deterministic for fixed inputs.

Approximate feasibility of the returned iterate is expected; rigorous
feasibility is recovered downstream by certificate restoration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

__all__ = ["BlockSdp", "IpmResult", "solve"]

_FRACTION_TO_BOUNDARY = 0.98
_RESIDUAL_TOL = 1e-9
_STALL_WINDOW = 30


@dataclass(frozen=True)
class BlockSdp:
    """Problem data: per-block cost matrices and stacked constraints.

    ``constraints[k]`` is a list of per-block symmetric matrices A_kj;
    zero blocks may be given as None.
    """

    block_sizes: Tuple[int, ...]
    cost: Tuple[np.ndarray, ...]
    constraints: Tuple[Tuple[np.ndarray, ...], ...]
    rhs: np.ndarray


@dataclass
class IpmResult:
    X: List[np.ndarray]
    lam: np.ndarray
    Z: List[np.ndarray]
    objective: float
    status: str  # "optimal" | "maxiter" | "stalled"
    iterations: int
    mu: float
    primal_residual: float
    dual_residual: float


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _sqrt_and_invsqrt(M: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    w, Q = np.linalg.eigh(M)
    w = np.maximum(w, 1e-300)
    s = np.sqrt(w)
    return (Q * s) @ Q.T, (Q / s) @ Q.T


def _nt_scaling(X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Scaling point W with W Z W = X."""
    xh, _ = _sqrt_and_invsqrt(X)
    inner = _sym(xh @ Z @ xh)
    _, inner_invsqrt = _sqrt_and_invsqrt(inner)
    return _sym(xh @ inner_invsqrt @ xh)


def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    """Largest alpha with X + alpha dX psd (infinite when unconstrained)."""
    w, Q = np.linalg.eigh(X)
    w = np.maximum(w, 1e-300)
    whitener = (Q / np.sqrt(w)) @ Q.T
    lmin = np.linalg.eigvalsh(_sym(whitener @ dX @ whitener.T))[0]
    if lmin >= -1e-16:
        return np.inf
    return -1.0 / lmin


def solve(prob: BlockSdp, tol_mu: float = 1e-10, max_iter: int = 200) -> IpmResult:
    """Run the interior-point iteration to duality measure <= tol_mu."""
    sizes = prob.block_sizes
    nb = len(sizes)
    m = len(prob.rhs)
    ntot = sum(sizes)
    b = np.asarray(prob.rhs, dtype=float)

    # stack constraints per block: (m, n_j, n_j)
    stacks = []
    for j, n in enumerate(sizes):
        rows = []
        for k in range(m):
            A = prob.constraints[k][j]
            rows.append(np.zeros((n, n)) if A is None else np.asarray(A, float))
        stacks.append(np.array(rows))
    C = [np.asarray(Cj, float) for Cj in prob.cost]

    b_scale = 1.0 + float(np.max(np.abs(b)))
    c_scale = 1.0 + max(float(np.max(np.abs(Cj))) if Cj.size else 0.0 for Cj in C)

    def apply_A(Xs: Sequence[np.ndarray]) -> np.ndarray:
        out = np.zeros(m)
        for j in range(nb):
            out += np.einsum("kij,ij->k", stacks[j], Xs[j])
        return out

    def apply_AT(lam: np.ndarray) -> List[np.ndarray]:
        return [np.einsum("k,kij->ij", lam, stacks[j]) for j in range(nb)]

    X = [np.eye(n) for n in sizes]
    Z = [np.eye(n) for n in sizes]
    lam = np.zeros(m)

    def snapshot(status: str, it: int, mu: float, rp: float, rd: float) -> IpmResult:
        obj = sum(float(np.sum(C[j] * X[j])) for j in range(nb))
        return IpmResult(
            X=[Xj.copy() for Xj in X],
            lam=lam.copy(),
            Z=[Zj.copy() for Zj in Z],
            objective=obj,
            status=status,
            iterations=it,
            mu=mu,
            primal_residual=rp,
            dual_residual=rd,
        )

    mu = 1.0
    rp_norm = rd_norm = np.inf
    best_mu = np.inf
    best_state = None
    stall = 0

    for it in range(max_iter):
        mu = sum(float(np.sum(X[j] * Z[j])) for j in range(nb)) / ntot
        rp = b - apply_A(X)
        ATlam = apply_AT(lam)
        Rd = [C[j] - ATlam[j] - Z[j] for j in range(nb)]
        rp_norm = float(np.max(np.abs(rp))) / b_scale
        rd_norm = max(float(np.max(np.abs(R))) for R in Rd) / c_scale

        if mu <= tol_mu and rp_norm <= _RESIDUAL_TOL and rd_norm <= _RESIDUAL_TOL:
            return snapshot("optimal", it, mu, rp_norm, rd_norm)

        merit = mu + rp_norm + rd_norm
        if merit < best_mu * (1 - 1e-3):
            best_mu = merit
            best_state = ([Xj.copy() for Xj in X], lam.copy(), [Zj.copy() for Zj in Z])
            stall = 0
        else:
            stall += 1
        if stall >= _STALL_WINDOW:
            break

        try:
            W = [_nt_scaling(X[j], Z[j]) for j in range(nb)]
            scaled = [
                np.einsum("ab,kbc,cd->kad", W[j], stacks[j], W[j]) for j in range(nb)
            ]
            schur = _sym(
                sum(np.einsum("kij,lij->kl", scaled[j], stacks[j]) for j in range(nb))
            )
            Zinv = []
            for j in range(nb):
                w, Q = np.linalg.eigh(Z[j])
                Zinv.append((Q / np.maximum(w, 1e-300)) @ Q.T)

            def direction(sigma: float):
                Rc = [sigma * mu * Zinv[j] - X[j] for j in range(nb)]
                rhs = rp - apply_A(
                    [Rc[j] - W[j] @ Rd[j] @ W[j] for j in range(nb)]
                )
                try:
                    dlam = np.linalg.solve(schur, rhs)
                except np.linalg.LinAlgError:
                    dlam = np.linalg.lstsq(schur, rhs, rcond=None)[0]
                dZ = [Rd[j] - np.einsum("k,kij->ij", dlam, stacks[j]) for j in range(nb)]
                dX = [_sym(Rc[j] - W[j] @ dZ[j] @ W[j]) for j in range(nb)]
                return dX, dlam, dZ

            dX_aff, _, dZ_aff = direction(0.0)
            a_p = min([_max_step(X[j], dX_aff[j]) for j in range(nb)] + [np.inf])
            a_d = min([_max_step(Z[j], dZ_aff[j]) for j in range(nb)] + [np.inf])
            alpha = min(_FRACTION_TO_BOUNDARY * a_p, _FRACTION_TO_BOUNDARY * a_d, 1.0)
            mu_aff = (
                sum(
                    float(np.sum((X[j] + alpha * dX_aff[j]) * (Z[j] + alpha * dZ_aff[j])))
                    for j in range(nb)
                )
                / ntot
            )
            sigma = min(0.8, max(1e-6, (max(mu_aff, 0.0) / mu) ** 3))

            dX, dlam, dZ = direction(sigma)
            a_p = min([_max_step(X[j], dX[j]) for j in range(nb)] + [np.inf])
            a_d = min([_max_step(Z[j], dZ[j]) for j in range(nb)] + [np.inf])
            a_p = min(1.0, _FRACTION_TO_BOUNDARY * a_p)
            a_d = min(1.0, _FRACTION_TO_BOUNDARY * a_d)
            if not (np.isfinite(a_p) and np.isfinite(a_d)):
                break

            X_new = [_sym(X[j] + a_p * dX[j]) for j in range(nb)]
            Z_new = [_sym(Z[j] + a_d * dZ[j]) for j in range(nb)]
            if any(np.any(~np.isfinite(M)) for M in X_new + Z_new):
                break
            X, Z = X_new, Z_new
            lam = lam + a_d * dlam
        except np.linalg.LinAlgError:
            break

    if best_state is not None:
        X, lam, Z = best_state
        mu = sum(float(np.sum(X[j] * Z[j])) for j in range(nb)) / ntot
        rp_norm = float(np.max(np.abs(b - apply_A(X)))) / b_scale
        ATlam = apply_AT(lam)
        rd_norm = (
            max(float(np.max(np.abs(C[j] - ATlam[j] - Z[j]))) for j in range(nb))
            / c_scale
        )
    status = "maxiter" if mu > tol_mu else "stalled"
    return snapshot(status, max_iter, mu, rp_norm, rd_norm)
