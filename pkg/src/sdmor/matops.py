"""Dense real-matrix kernels.

Matrix exponential and the zero-order-hold integral, rank-revealing
orthonormal bases, a continuous Lyapunov solver and definiteness tests.
Everything here is a pure function of its arguments.
"""
import numpy as np
import scipy.linalg

from .errors import DimensionError, InputError, NotHurwitzError

DEFAULT_RANK_TOL = 1e-9


def as_matrix(M, name="matrix"):
    """Return ``M`` as a 2-D float array, rejecting non-finite entries."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InputError(f"{name} has non-finite entries")
    return M


def _square(A, name="A"):
    A = as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def max_abs(M):
    M = np.asarray(M)
    return float(np.max(np.abs(M))) if M.size else 0.0


def expm(A, t=1.0):
    """Matrix exponential ``e^{A t}``.

    Backed by scipy's scaling-and-squaring Pade implementation.
    """
    A = _square(A)
    t = float(t)
    if not np.isfinite(t) or t < 0:
        raise InputError(f"t must be a finite nonnegative real, got {t}")
    return scipy.linalg.expm(A * t)


def zoh_integral(A, h):
    r"""Integral :math:`\Theta(h) = \int_0^h e^{As}\,ds`.

    Read off the top-right block of ``expm([[A, I], [0, 0]] * h)``, which
    needs no inverse of ``A`` (``A`` may be singular).
    """
    A = _square(A)
    n = A.shape[0]
    aug = np.zeros((2 * n, 2 * n))
    aug[:n, :n] = A
    aug[:n, n:] = np.eye(n)
    return expm(aug, h)[:n, n:]


def orthonormal_range(M, rank_tol=DEFAULT_RANK_TOL):
    """Orthonormal basis of the numerical column space of ``M``.

    Singular values below ``rank_tol * sigma_max`` are treated as zero. A
    zero (or column-less) ``M`` gives an ``n x 0`` array.
    """
    M = as_matrix(M, "M")
    n = M.shape[0]
    if not 0 < rank_tol < 1:
        raise InputError(f"rank_tol must lie in (0, 1), got {rank_tol}")
    if M.shape[1] == 0:
        return np.zeros((n, 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((n, 0))
    r = int(np.count_nonzero(s > rank_tol * s[0]))
    return U[:, :r].copy()


def spectral_abscissa(A):
    """Largest real part over the eigenvalues of ``A`` and the eigenvalue attaining it."""
    A = _square(A)
    eig = np.linalg.eigvals(A)
    i = int(np.argmax(eig.real))
    return float(eig[i].real), complex(eig[i])


def solve_continuous_lyapunov(A, Q=None):
    """Solve ``A^T P + P A = -Q`` for symmetric positive definite ``P``.

    ``Q`` defaults to the identity. Raises NotHurwitzError (carrying the
    offending eigenvalue) unless every eigenvalue of ``A`` has negative
    real part.
    """
    A = _square(A)
    n = A.shape[0]
    Q = np.eye(n) if Q is None else as_matrix(Q, "Q")
    if Q.shape != A.shape:
        raise DimensionError(f"Q has shape {Q.shape}, expected {A.shape}")
    Q = 0.5 * (Q + Q.T)
    abscissa, eig = spectral_abscissa(A)
    if abscissa >= 0:
        raise NotHurwitzError(eig)

    # scipy solves a X + X a^H = q
    P = scipy.linalg.solve_continuous_lyapunov(A.T, -Q)
    P = 0.5 * (P + P.T)
    qscale = max_abs(Q)
    for _ in range(3):
        R = A.T @ P + P @ A + Q
        if max_abs(R) <= 1e-10 * qscale:
            break
        dP = scipy.linalg.solve_continuous_lyapunov(A.T, -R)
        P = P + 0.5 * (dP + dP.T)
    return P


def symmetric_part(S):
    S = _square(S, "S")
    return 0.5 * (S + S.T)


def default_margin_tol(S):
    return 1e-10 * (1.0 + max_abs(S))


def is_negative_definite(S, margin_tol=None):
    """Test ``S < 0`` strictly.

    Returns ``(verdict, lam_max)`` where the verdict is
    ``lam_max < -margin_tol``; ``margin_tol`` defaults to
    ``1e-10 * (1 + max|S|)``.
    """
    S = symmetric_part(S)
    if margin_tol is None:
        margin_tol = default_margin_tol(S)
    lam_max = float(np.linalg.eigvalsh(S)[-1]) if S.size else -np.inf
    return lam_max < -margin_tol, lam_max


def is_positive_definite(S, margin_tol=None):
    """Test ``S > 0`` strictly; returns ``(verdict, lam_min)``."""
    S = symmetric_part(S)
    if margin_tol is None:
        margin_tol = default_margin_tol(S)
    lam_min = float(np.linalg.eigvalsh(S)[0]) if S.size else np.inf
    return lam_min > margin_tol, lam_min


def contained_in_range(V, U):
    """Relative residual of projecting the columns of ``U`` onto ``im(V)``.

    ``V`` must have orthonormal columns. Returns
    ``||U - V V^T U||_F / ||U||_F`` (0 for an empty or zero ``U``).
    """
    U = np.asarray(U, dtype=float)
    norm = np.linalg.norm(U)
    if U.size == 0 or norm == 0.0:
        return 0.0
    R = U - V @ (V.T @ U)
    R = R - V @ (V.T @ R)
    return float(np.linalg.norm(R) / norm)


def extend_basis(V, W, rank_tol=DEFAULT_RANK_TOL, scale=None, with_residual=False):
    """New orthonormal directions of ``im(W)`` not already in ``im(V)``.

    Block classical Gram-Schmidt with one reorthogonalization pass; a
    residual direction survives when its singular value exceeds
    ``rank_tol * scale`` (``scale`` defaults to ``||W||_2``).

    With ``with_residual`` also returns the kept residual block
    ``U diag(s)``, whose columns carry the true size of the new directions.
    Feeding that block (rather than ``U``) to the next level keeps rank
    decisions relative to the original vectors: normalizing a tiny
    residual would blow its rounding error up to the threshold.
    """
    n = V.shape[0]
    empty = np.zeros((n, 0))
    if W.shape[1] == 0:
        return (empty, empty) if with_residual else empty
    if scale is None:
        scale = np.linalg.norm(W, 2)
    if scale == 0.0:
        return (empty, empty) if with_residual else empty
    R = W - V @ (V.T @ W)
    R = R - V @ (V.T @ R)
    U, s, _ = np.linalg.svd(R, full_matrices=False)
    keep = int(np.count_nonzero(s > rank_tol * scale))
    if keep == 0:
        return (empty, empty) if with_residual else empty
    U, s = U[:, :keep], s[:keep]
    residual = U * s
    # one more sweep so the new block is orthogonal to V to working precision
    U = U - V @ (V.T @ U)
    U, _ = np.linalg.qr(U)
    return (U, residual) if with_residual else U
