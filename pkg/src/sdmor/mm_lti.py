"""Moment matching for continuous-time LTI plants.

Markov parameters ``C A^k B``, orthonormal bases of the N-partial
reachability space ``im[B, AB, ..., A^N B]`` and the projection
``(Vinv A V, Vinv B, C V)`` that matches the first ``N + 1`` parameters.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, PreconditionError, ZeroSpaceError
from .matops import DEFAULT_RANK_TOL, contained_in_range, extend_basis, max_abs, orthonormal_range
from .systems import ContinuousLtiSystem

LEFT_INVERSE_KINDS = ("pseudoinverse", "lyapunov_weighted")
SPAN_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ProjectionReduction:
    """Projection data: basis ``V`` (n x r), left inverse ``Vinv`` (r x n),
    moment horizon ``N`` and how the left inverse was chosen."""

    V: np.ndarray
    Vinv: np.ndarray
    N: int
    left_inverse_kind: str = "pseudoinverse"

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        W = np.asarray(self.Vinv, dtype=float)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "Vinv", W)
        if self.left_inverse_kind not in LEFT_INVERSE_KINDS:
            raise ValueError(f"unknown left inverse kind {self.left_inverse_kind!r}")
        if V.ndim != 2 or W.shape != (V.shape[1], V.shape[0]):
            raise ValueError(f"Vinv shape {W.shape} does not fit V shape {V.shape}")
        if V.shape[1] > V.shape[0]:
            raise ValueError("V has more columns than rows")
        gap = max_abs(W @ V - np.eye(V.shape[1]))
        if gap > 1e-10:
            raise ConditioningError(f"Vinv is not a left inverse of V (max|Vinv V - I| = {gap:.3e})")

    @property
    def r(self):
        return self.V.shape[1]

    @property
    def n(self):
        return self.V.shape[0]

    @classmethod
    def orthogonal(cls, V, N):
        """Projection with the pseudoinverse ``V^T`` (``V`` orthonormal)."""
        V = np.asarray(V, dtype=float)
        return cls(V, V.T.copy(), N, "pseudoinverse")


def markov_parameters_lti(sys, N):
    """``[C B, C A B, ..., C A^N B]`` by repeated multiplication."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    out = []
    X = sys.B
    for _ in range(N + 1):
        out.append(sys.C @ X)
        X = sys.A @ X
    return out


def krylov_levels(A, B, N_max, rank_tol=DEFAULT_RANK_TOL):
    """Nested orthonormal basis of ``im[B, AB, ..., A^L B]`` level by level.

    Returns ``(V, dims)`` where ``V[:, :dims[L]]`` spans level ``L``. Each
    level multiplies only the directions added at the previous level, kept
    at their residual size, and orthogonalizes them against the accumulated
    basis, so ``dims`` follows the numerical rank of ``[B, AB, ..., A^L B]``. Stops early once a
    level adds nothing (the space is then A-invariant), so ``len(dims)``
    may be smaller than ``N_max + 1``.
    """
    V, frontier, scale = _start(B, rank_tol)
    if V.shape[1] == 0:
        raise ZeroSpaceError("input matrix is zero: reachability space is {0}")
    dims = [V.shape[1]]
    for _ in range(N_max):
        W = A @ frontier
        scale = max(scale, np.linalg.norm(W, 2))
        new, frontier = extend_basis(V, W, rank_tol, scale=scale, with_residual=True)
        if new.shape[1] == 0:
            break
        V = np.hstack([V, new])
        dims.append(V.shape[1])
    return V, dims


def _start(B, rank_tol):
    """Level-0 basis, its residual block ``U diag(s)`` and the scale ``s_max``."""
    V = orthonormal_range(B, rank_tol)
    if V.shape[1] == 0:
        return V, V, 0.0
    frontier = V @ (V.T @ B)
    U, s, _ = np.linalg.svd(frontier, full_matrices=False)
    r = V.shape[1]
    return V, U[:, :r] * s[:r], float(s[0])


def level_dim(dims, N):
    """Dimension at level ``N`` given a (possibly early-stopped) dims list."""
    return dims[min(N, len(dims) - 1)]


def reachability_space_lti(sys, N, rank_tol=DEFAULT_RANK_TOL):
    """Orthonormal basis of the N-partial reachability space of ``sys``."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    V, dims = krylov_levels(sys.A, sys.B, N, rank_tol)
    return V[:, :level_dim(dims, N)]


def reachability_dims_lti(sys, N_max, rank_tol=DEFAULT_RANK_TOL):
    _, dims = krylov_levels(sys.A, sys.B, N_max, rank_tol)
    return dims


def span_residual_lti(sys, V, N, rank_tol=DEFAULT_RANK_TOL):
    """Worst relative residual of the level-``N`` reachability directions
    projected onto ``im(V)`` (``V`` orthonormal)."""
    U = reachability_space_lti(sys, N, rank_tol)
    return contained_in_range(V, U)


def reduce_lti(sys, proj, check_span=True, span_tol=SPAN_TOL):
    """Reduced plant ``(Vinv A V, Vinv B, C V)`` of order ``proj.r``.

    With ``check_span`` the reachability space at ``proj.N`` must lie in
    ``im(proj.V)`` to within ``span_tol``, otherwise PreconditionError.
    """
    V, W = proj.V, proj.Vinv
    if V.shape[0] != sys.n:
        raise PreconditionError(f"V has {V.shape[0]} rows but the plant has order {sys.n}")
    if check_span:
        res = span_residual_lti(sys, _orth(V), proj.N)
        if res > span_tol:
            raise PreconditionError(
                f"im(V) misses the {proj.N}-partial reachability space (relative residual {res:.3e})"
            )
    return ContinuousLtiSystem(W @ sys.A @ V, W @ sys.B, sys.C @ V)


def _orth(V):
    if max_abs(V.T @ V - np.eye(V.shape[1])) <= 1e-10:
        return V
    Q, _ = np.linalg.qr(V)
    return Q


def markov_residual(X, Y):
    """``||X - Y||_F / (1 + ||X||_F)``."""
    return float(np.linalg.norm(X - Y) / (1.0 + np.linalg.norm(X)))


def markov_residuals_lti(original, reduced, N):
    """Per-index relative residual of the first ``N + 1`` Markov parameters."""
    a = markov_parameters_lti(original, N)
    b = markov_parameters_lti(reduced, N)
    return [markov_residual(x, y) for x, y in zip(a, b)]


def choose_horizon(dims, r_max, N_cap=None):
    """Largest ``N`` with ``dim R^N <= r_max``.

    ``dims`` is the per-level dimension list from the level builders. If
    the space stops growing before exceeding ``r_max``, the first
    stationary level is returned with ``saturated=True``. Returns
    ``(N, saturated)``, or ``None`` when ``dim R^0 > r_max``.
    """
    if dims[0] > r_max:
        return None
    N = 0
    for level in range(1, len(dims)):
        if dims[level] > r_max:
            return N, False
        N = level
    saturated = N_cap is None or len(dims) - 1 < N_cap
    return N, saturated

