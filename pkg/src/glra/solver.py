"""Rank-constrained approximation of M by B X C in Hilbert-Schmidt norm.

Solves ``min ||M - B X C||_HS`` over matrices X with rank(X) <= r.  The
closed-form solution is ``X = B^+ (P_ran(B) M P_ker(C)-perp)_r C^+``; it
satisfies the minimality property ``X = P_ker(B)-perp X P_ran(C)`` (all
blocks of X outside the ran(C) -> ker(B)-perp corner vanish), which is
what survives of the often-quoted but generally false minimal-Frobenius-
norm property.  The full solution set, the optimal-error identities, the
adjoint problem and an alternating-least-squares oracle for testing live
here as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    InputError,
    Tolerances,
    TruncatedSvd,
    Uniqueness,
    as_matrix,
    hs_norm,
    pinv,
    proj_kernel_perp,
    proj_range,
    truncated_svd,
)

__all__ = [
    "GlraProblem",
    "GlraSolution",
    "OptimalError",
    "adjoint_problem",
    "als_oracle",
    "canonicalize",
    "classify_uniqueness",
    "minimality_defect",
    "objective",
    "optimal_error",
    "projected_truncation",
    "solution_set_sample",
    "solve",
    "solve_adjoint",
]


@dataclass(frozen=True)
class GlraProblem:
    """The data (M, B, C, r) of one approximation problem.

    Shapes: M is m x n, B is m x p, C is q x n, and the unknown X is
    p x q so that B X C matches M.
    """

    m: np.ndarray
    b: np.ndarray
    c: np.ndarray
    r: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "m", as_matrix(self.m, "M"))
        object.__setattr__(self, "b", as_matrix(self.b, "B"))
        object.__setattr__(self, "c", as_matrix(self.c, "C"))
        if self.b.shape[0] != self.m.shape[0]:
            raise InputError(
                f"B has {self.b.shape[0]} rows but M has {self.m.shape[0]}"
            )
        if self.c.shape[1] != self.m.shape[1]:
            raise InputError(
                f"C has {self.c.shape[1]} columns but M has {self.m.shape[1]}"
            )
        if self.r < 1:
            raise InputError(f"rank bound must be >= 1, got {self.r}")

    @property
    def x_shape(self) -> tuple[int, int]:
        return (self.b.shape[1], self.c.shape[0])


@dataclass(frozen=True)
class GlraSolution:
    """A solved problem: the minimiser, its image, and diagnostics.

    ``y = B x_hat C`` equals the chosen rank-r truncation of the projected
    matrix; ``objective**2 + delta`` recovers ``||M||_HS**2``.
    """

    x_hat: np.ndarray
    y: np.ndarray
    objective: float
    delta: float
    uniqueness: Uniqueness
    minimality_defect: float


def projected_truncation(
    p: GlraProblem, tol: Tolerances = DEFAULT_TOL
) -> tuple[np.ndarray, TruncatedSvd]:
    """The projected matrix G = P_ran(B) M P_ker(C)-perp and its rank-r truncation."""
    g = proj_range(p.b, tol) @ p.m @ proj_kernel_perp(p.c, tol)
    return g, truncated_svd(g, p.r, tol)


def solve(p: GlraProblem, tol: Tolerances = DEFAULT_TOL) -> GlraSolution:
    """Closed-form minimiser of ||M - B X C||_HS over rank(X) <= r.

    When the truncation is not unique the deterministic canonical one is
    used and the solution is flagged ``NON_UNIQUE``.
    """
    _, tsvd = projected_truncation(p, tol)
    y_target = tsvd.matrix()
    x_hat = pinv(p.b, tol) @ y_target @ pinv(p.c, tol)
    y = p.b @ x_hat @ p.c
    return GlraSolution(
        x_hat=x_hat,
        y=y,
        objective=hs_norm(p.m - y),
        delta=float(np.sum(tsvd.factors.sigma**2)),
        uniqueness=tsvd.uniqueness,
        minimality_defect=minimality_defect(x_hat, p.b, p.c, tol),
    )


def objective(p: GlraProblem, x) -> float:
    """||M - B X C||_HS for a candidate X of shape p x q."""
    xa = as_matrix(x, "X")
    if xa.shape != p.x_shape:
        raise InputError(f"X must have shape {p.x_shape}, got {xa.shape}")
    return hs_norm(p.m - p.b @ xa @ p.c)


def minimality_defect(x, b, c, tol: Tolerances = DEFAULT_TOL) -> float:
    """Distance of X from P_ker(B)-perp X P_ran(C); zero iff X is minimal."""
    xa = as_matrix(x, "X")
    return hs_norm(xa - proj_kernel_perp(b, tol) @ xa @ proj_range(c, tol))


def canonicalize(x, b, c, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Project X onto the minimal representative P_ker(B)-perp X P_ran(C).

    Idempotent, and leaves the product B X C unchanged.
    """
    return proj_kernel_perp(b, tol) @ as_matrix(x, "X") @ proj_range(c, tol)


def solution_set_sample(sol: GlraSolution, p: GlraProblem, t, s) -> np.ndarray:
    """A member ``x_hat + P_ker(B) T + S P_ran(C)-perp`` of the solution set.

    Every such matrix attains the same objective; canonicalize() maps it
    back to ``x_hat``.
    """
    ta = as_matrix(t, "T")
    sa = as_matrix(s, "S")
    if ta.shape != p.x_shape or sa.shape != p.x_shape:
        raise InputError(f"T and S must have shape {p.x_shape}")
    pp, qq = p.x_shape
    ker_b = np.eye(pp) - proj_kernel_perp(p.b)
    ran_c_perp = np.eye(qq) - proj_range(p.c)
    return sol.x_hat + ker_b @ ta + sa @ ran_c_perp


@dataclass(frozen=True)
class OptimalError:
    """Optimal objective and the gap delta, with three redundant recomputations."""

    error: float
    delta: float
    delta_variants: tuple[float, float, float]


def _top_eigvals_sum(a: np.ndarray, r: int) -> float:
    # a need not be symmetric; its nonzero spectrum is real and nonnegative
    # because it is similar to a PSD matrix.
    evals = np.sort(np.real(np.linalg.eigvals(a)))[::-1]
    return float(np.sum(evals[:r]))


def _top_singvals_sum(sym: np.ndarray, r: int) -> float:
    s = np.linalg.svd((sym + sym.T) / 2.0, compute_uv=False)
    return float(np.sum(s[:r]))


def optimal_error(p: GlraProblem, tol: Tolerances = DEFAULT_TOL) -> OptimalError:
    """Optimal error and delta = sum of the r largest sigma_i(G)^2.

    The three variants recompute delta from G G^T, from G^T G expressed
    through C^+ C, and from the eigenvalues of B^+ M C^+ C M^T B; all four
    agree to rounding and ``error = sqrt(||M||^2 - delta)``.
    """
    g, tsvd = projected_truncation(p, tol)
    delta = float(np.sum(tsvd.factors.sigma**2))
    proj_b = proj_range(p.b, tol)
    pk_c = proj_kernel_perp(p.c, tol)
    v1 = _top_singvals_sum(proj_b @ p.m @ pk_c @ p.m.T @ proj_b, p.r)
    v2 = _top_singvals_sum(pk_c @ p.m.T @ proj_b @ p.m @ pk_c, p.r)
    v3 = _top_eigvals_sum(pinv(p.b, tol) @ p.m @ pk_c @ p.m.T @ p.b, p.r)
    gap = hs_norm(p.m) ** 2 - delta
    return OptimalError(
        error=float(np.sqrt(max(gap, 0.0))), delta=delta, delta_variants=(v1, v2, v3)
    )


def adjoint_problem(p: GlraProblem) -> GlraProblem:
    """The transposed problem min ||M^T - C^T X B^T|| with B and C swapped."""
    return GlraProblem(m=p.m.T, b=p.c.T, c=p.b.T, r=p.r)


def solve_adjoint(p: GlraProblem, tol: Tolerances = DEFAULT_TOL) -> GlraSolution:
    """Solve the adjoint problem; its objective equals the primal one.

    The returned minimiser X (shape q x p) satisfies the transposed
    minimality property P_ran(C) X P_ker(B)-perp = X.
    """
    return solve(adjoint_problem(p), tol)


def classify_uniqueness(p: GlraProblem, tol: Tolerances = DEFAULT_TOL) -> Uniqueness:
    """Uniqueness flag of the rank-r truncation behind solve()."""
    return projected_truncation(p, tol)[1].uniqueness


def als_oracle(
    p: GlraProblem, restarts: int = 20, iters: int = 200, seed: int = 0
) -> float:
    """Best objective found by alternating least squares over X = U V^T.

    A brute-force reference for the closed-form solver: U (p x r) and
    V (q x r) are updated by exact least-squares steps from ``restarts``
    seeded random initialisations.  Deterministic for a fixed seed.
    """
    if restarts < 1 or iters < 1:
        raise InputError("restarts and iters must be >= 1")
    rng = np.random.default_rng(seed)
    pp, qq = p.x_shape
    r = min(p.r, pp, qq)
    b_pinv = pinv(p.b)
    best = np.inf
    for _ in range(restarts):
        u = rng.standard_normal((pp, r))
        v = rng.standard_normal((qq, r))
        prev = np.inf
        for _ in range(iters):
            k = v.T @ p.c
            u = b_pinv @ p.m @ pinv(k)
            lhs = p.b @ u
            v = (pinv(lhs) @ p.m @ pinv(p.c)).T
            obj = hs_norm(p.m - lhs @ v.T @ p.c)
            if abs(prev - obj) <= 1e-13 * (1.0 + obj):
                break
            prev = obj
        best = min(best, hs_norm(p.m - p.b @ u @ v.T @ p.c))
    return float(best)
