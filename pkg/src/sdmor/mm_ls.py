"""Moment matching for discrete-time linear switched systems.

Switched Markov parameters ``C A_{k1} ... A_{kM} B_j``, the N-partial
reachability space built by the recursion
``R^0 = sum_j im B_j``, ``R^N = R^0 + sum_k A_k R^{N-1}``, and the
projection that preserves every parameter of length at most ``N``.
"""
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import BudgetError, DimensionError, PreconditionError, ZeroSpaceError
from .matops import DEFAULT_RANK_TOL, contained_in_range, extend_basis
from .mm_lti import SPAN_TOL, _orth, _start, markov_residual
from .simulate import generate_campaign_sequences, simulate_ls
from .systems import SwitchedLinearSystem

MARKOV_CAP = 10**6
HORIZON_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class SwitchedMarkovParameter:
    """``C A_{word[0]} ... A_{word[-1]} B_{entry_mode}``; indices are 1-based."""

    word: tuple
    entry_mode: int
    value: np.ndarray

    @property
    def length(self):
        return len(self.word)


def markov_count(D, N):
    return sum(D ** (M + 1) for M in range(N + 1))


def iter_markov_ls(sys, N):
    """Yield parameters ordered by word length, then lexicographically by
    word, then by entry mode."""
    D = sys.D
    A = sys.A_modes
    B = sys.B_modes
    rows = {(): sys.C}
    for M in range(N + 1):
        if M > 0:
            rows = {w + (k,): rows[w] @ A[k] for w in product(range(D), repeat=M - 1) for k in range(D)}
        for word in product(range(D), repeat=M):
            L = rows[word]
            for j in range(D):
                yield SwitchedMarkovParameter(tuple(k + 1 for k in word), j + 1, L @ B[j])


def markov_parameters_ls(sys, N, cap=MARKOV_CAP):
    """All switched Markov parameters of length ``0..N``.

    There are ``sum_{M=0}^{N} D^{M+1}`` of them; BudgetError when that
    exceeds ``cap``.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    count = markov_count(sys.D, N)
    if count > cap:
        raise BudgetError(f"{count} switched Markov parameters requested, cap is {cap}")
    return list(iter_markov_ls(sys, N))


def max_length_within(D, cap=MARKOV_CAP):
    """Largest ``N`` whose parameter count stays within ``cap``."""
    if D == 1:
        return max(cap - 1, 0)
    N, count, term = 0, D, D
    while True:
        term *= D
        if count + term > cap:
            return N
        count += term
        N += 1


def ls_levels(sys, N_max, rank_tol=DEFAULT_RANK_TOL):
    """Nested orthonormal basis of ``R^0 .. R^L`` with per-level dims.

    Breadth first: each level applies every mode matrix to the directions
    new at the previous level (kept at their residual size) and keeps what
    is not yet spanned. Stops
    early once a level adds nothing, since the recursion is then
    stationary.
    """
    V, frontier, scale = _start(np.hstack(sys.B_modes), rank_tol)
    if V.shape[1] == 0:
        raise ZeroSpaceError("all input matrices vanish: reachability space is {0}")
    dims = [V.shape[1]]
    for _ in range(N_max):
        W = np.hstack([A @ frontier for A in sys.A_modes])
        scale = max(scale, np.linalg.norm(W, 2))
        new, frontier = extend_basis(V, W, rank_tol, scale=scale, with_residual=True)
        if new.shape[1] == 0:
            break
        V = np.hstack([V, new])
        dims.append(V.shape[1])
    return V, dims


def reachability_space_ls(sys, N, rank_tol=DEFAULT_RANK_TOL):
    """Orthonormal basis of the N-partial reachability space of ``sys``."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    V, dims = ls_levels(sys, N, rank_tol)
    return V[:, :dims[min(N, len(dims) - 1)]]


def reduce_ls(sys, proj, check_span=True, span_tol=SPAN_TOL):
    """Reduced switched model ``({(Vinv A_i V, Vinv B_i)}, C V)``."""
    V, W = proj.V, proj.Vinv
    if V.shape[0] != sys.n:
        raise PreconditionError(f"V has {V.shape[0]} rows but the system has order {sys.n}")
    if check_span:
        U = reachability_space_ls(sys, proj.N)
        res = contained_in_range(_orth(V), U)
        if res > span_tol:
            raise PreconditionError(
                f"im(V) misses the {proj.N}-partial reachability space (relative residual {res:.3e})"
            )
    modes = tuple((W @ A @ V, W @ B) for A, B in sys.modes)
    return SwitchedLinearSystem(modes, sys.C @ V, grid=sys.grid)


def markov_residuals_ls(original, reduced, N, cap=MARKOV_CAP):
    """Max relative residual per word length ``0..N``.

    Both parameter trees are walked in lockstep; only one row block per
    word is held at a time.
    """
    if original.D != reduced.D:
        raise DimensionError("systems have different mode counts")
    if markov_count(original.D, N) > cap:
        raise BudgetError(f"{markov_count(original.D, N)} parameters exceed the cap {cap}")
    out = [0.0] * (N + 1)
    for a, b in zip(iter_markov_ls(original, N), iter_markov_ls(reduced, N)):
        out[a.length] = max(out[a.length], markov_residual(a.value, b.value))
    return out


@dataclass
class HorizonReport:
    """Per-step worst output deviation between two switched models.

    ``deviation[k]`` is ``max over trials of ||y_k - ybar_k|| / (1 + ||y_k||)``.
    """

    N: int
    trials: int
    deviation: list = field(default_factory=list)
    tol: float = HORIZON_TOL

    @property
    def passed(self):
        return all(d <= self.tol for d in self.deviation[: self.N + 1])

    @property
    def max_within_horizon(self):
        return max(self.deviation[: self.N + 1], default=0.0)

    def to_dict(self):
        return {
            "N": self.N,
            "trials": self.trials,
            "tol": self.tol,
            "passed": self.passed,
            "deviation_per_k": list(self.deviation),
        }


def output_match_horizon_check(original, reduced, N, trials=100, seed=0, tail=5, tol=HORIZON_TOL):
    """Compare outputs of two switched models on random (u, sigma) pairs.

    Sequences run to ``k = N + tail`` so the deviation past the matching
    horizon is recorded as well; only ``k <= N`` is judged.
    """
    if (original.D, original.m, original.p) != (reduced.D, reduced.m, reduced.p):
        raise DimensionError("systems must share D, m and p")
    K = N + tail
    dev = np.zeros(K + 1)
    for u, sigma in generate_campaign_sequences(seed, K, original.D, original.m, trials):
        y = simulate_ls(original, u, sigma).y
        yb = simulate_ls(reduced, u, sigma).y
        d = np.linalg.norm(y - yb, axis=1) / (1.0 + np.linalg.norm(y, axis=1))
        dev = np.maximum(dev, d)
    return HorizonReport(N=N, trials=trials, deviation=[float(d) for d in dev], tol=tol)
