"""Quadratic stability of switched models and its preservation under
projection.

A switched model is quadratically stable when one symmetric ``P > 0``
satisfies ``A_i^T P A_i - P < 0`` for every mode. For a Hurwitz plant the
solution of ``A^T P + P A = -Q`` does this for every sampling grid, and
the left inverse ``(V^T P V)^{-1} V^T P`` carries it over to the reduced
model with ``Pbar = V^T P V``.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConditioningError, ConsistencyError, DimensionError
from .matops import is_negative_definite, is_positive_definite, solve_continuous_lyapunov
from .mm_ls import reduce_ls
from .systems import ContinuousLtiSystem


@dataclass(frozen=True, eq=False)
class StabilityCertificate:
    """Lyapunov matrix ``P`` and per-mode ``lambda_max(A_i^T P A_i - P)``."""

    P: np.ndarray
    margins: tuple

    @property
    def valid(self):
        return bool(np.all(np.linalg.eigvalsh(self.P) > 0)) and all(m < 0 for m in self.margins)

    def to_dict(self, include_P=True):
        out = {"margins": [float(m) for m in self.margins], "min_eig_P": float(np.linalg.eigvalsh(self.P)[0])}
        if include_P:
            out["P"] = self.P.tolist()
        return out


@dataclass(frozen=True, eq=False)
class Refutation:
    """Why ``P`` fails: ``mode`` is the first failing mode (1-based), or
    ``None`` when ``P`` itself is not positive definite."""

    mode: Optional[int]
    lam_max: float
    margins: tuple
    reason: str

    def to_dict(self):
        return {
            "refuted": True,
            "mode": self.mode,
            "lam_max": float(self.lam_max),
            "margins": [float(m) for m in self.margins],
            "reason": self.reason,
        }


def mode_margins(sys, P):
    """``lambda_max(A_i^T P A_i - P)`` for each mode."""
    return tuple(is_negative_definite(A.T @ P @ A - P)[1] for A in sys.A_modes)


def check_quadratic_stability(sys, P, margin_tol=None):
    """Certificate when ``P > 0`` and every ``A_i^T P A_i - P < 0``;
    otherwise a Refutation naming the first failing mode."""
    P = np.asarray(P, dtype=float)
    if P.shape != (sys.n, sys.n):
        raise DimensionError(f"P has shape {P.shape}, system order is {sys.n}")
    P = 0.5 * (P + P.T)
    margins = []
    failing = None
    for i, A in enumerate(sys.A_modes, start=1):
        ok, lam = is_negative_definite(A.T @ P @ A - P, margin_tol)
        margins.append(lam)
        if not ok and failing is None:
            failing = (i, lam)
    pd, lam_min = is_positive_definite(P, margin_tol)
    if not pd:
        return Refutation(None, lam_min, tuple(margins), f"P is not positive definite (lambda_min = {lam_min:.6g})")
    if failing is not None:
        i, lam = failing
        return Refutation(i, lam, tuple(margins), f"mode {i}: lambda_max(A^T P A - P) = {lam:.6g} is not < 0")
    return StabilityCertificate(P, tuple(margins))


def lyapunov_from_plant(plant, Q=None):
    """``P`` solving ``A^T P + P A = -Q`` (``Q = I`` by default).

    Raises NotHurwitzError for a plant that is not Hurwitz.
    """
    A = plant.A if isinstance(plant, ContinuousLtiSystem) else plant
    return solve_continuous_lyapunov(A, Q)


def stability_preserving_left_inverse(V, P, cond_limit=1e12):
    """``W = (V^T P V)^{-1} V^T P``, a left inverse of ``V`` that keeps
    ``V^T P V`` as a Lyapunov matrix of the projected system."""
    V = np.asarray(V, dtype=float)
    P = np.asarray(P, dtype=float)
    G = V.T @ P @ V
    G = 0.5 * (G + G.T)
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > cond_limit:
        raise ConditioningError(f"V^T P V is numerically singular (condition number {cond:.3e})")
    return np.linalg.solve(G, V.T @ P)


def certify_reduction(original, P, proj, reduced=None):
    """Certificate ``Pbar = V^T P V`` for the projected switched model.

    ``P`` must certify ``original`` and ``proj.Vinv`` must be the
    stability-preserving left inverse. The result is guaranteed
    mathematically, so a failing check raises ConsistencyError with
    condition numbers rather than returning a refutation.
    """
    V = proj.V
    if reduced is None:
        reduced = reduce_ls(original, proj)
    Pbar = V.T @ P @ V
    Pbar = 0.5 * (Pbar + Pbar.T)
    res = check_quadratic_stability(reduced, Pbar)
    if isinstance(res, Refutation):
        raise ConsistencyError(
            f"reduced model not certified by V^T P V: {res.reason}; "
            f"cond(P) = {np.linalg.cond(P):.3e}, cond(V^T P V) = {np.linalg.cond(Pbar):.3e}"
        )
    return res


def proof_chain_margins(original, P, V):
    """Largest eigenvalue of each matrix in the preservation argument, per mode.

    With ``W = (V^T P V)^{-1} V^T P`` and ``Pbar = V^T P V``, the four
    matrices are ``V^T A^T P A V - Pbar``,
    ``A V Pbar^{-1} V^T A^T - P^{-1}``,
    ``W A V Pbar^{-1} V^T A^T W^T - W P^{-1} W^T`` and
    ``Abar^T Pbar Abar - Pbar``. All of them should be negative definite.
    """
    W = stability_preserving_left_inverse(V, P)
    Pbar = V.T @ P @ V
    Pbar_inv = np.linalg.inv(Pbar)
    P_inv = np.linalg.inv(P)
    out = []
    for A in original.A_modes:
        Abar = W @ A @ V
        steps = (
            V.T @ A.T @ P @ A @ V - Pbar,
            A @ V @ Pbar_inv @ V.T @ A.T - P_inv,
            W @ A @ V @ Pbar_inv @ V.T @ A.T @ W.T - W @ P_inv @ W.T,
            Abar.T @ Pbar @ Abar - Pbar,
        )
        out.append(tuple(is_negative_definite(S)[1] for S in steps))
    return out
