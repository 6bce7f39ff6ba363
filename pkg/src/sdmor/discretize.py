"""Exact zero-order-hold discretization of a sampled-data system into a
switched model with one mode per admissible sampling interval."""
import numpy as np

from .errors import ConsistencyError, InputError
from .matops import expm, max_abs, zoh_integral
from .systems import SampledDataSystem, SwitchedLinearSystem, ensure_valid

IDENTITY_TOL = 1e-10


def exponential_identity_residual(A, h):
    """``max|e^{Ah} - (I + A Theta(h))|`` scaled by ``1 + max|e^{Ah}|``."""
    A = np.asarray(A, dtype=float)
    E = expm(A, h)
    Theta = zoh_integral(A, h)
    R = E - (np.eye(A.shape[0]) + A @ Theta)
    return max_abs(R) / (1.0 + max_abs(E))


def step_matrices(plant, h, check=True):
    """State and input matrices ``(Phi, Gamma)`` for one step of length ``h``.

    ``Phi = e^{Ah}`` and ``Gamma = Theta(h) B``. With ``check`` the two
    forms ``e^{Ah}`` and ``I + A Theta(h)`` are compared and a disagreement
    above 1e-10 (relative to ``1 + max|Phi|``) raises ConsistencyError.
    """
    h = float(h)
    if not np.isfinite(h) or h <= 0:
        raise InputError(f"sampling interval must be > 0, got {h}")
    A = plant.A
    Phi = expm(A, h)
    Theta = zoh_integral(A, h)
    if check:
        gap = max_abs(Phi - (np.eye(A.shape[0]) + A @ Theta)) / (1.0 + max_abs(Phi))
        if gap > IDENTITY_TOL:
            raise ConsistencyError(
                f"e^(Ah) and I + A*Theta(h) disagree by {gap:.3e} at h={h:g}; "
                "matrix exponential inaccurate for this ||A h||"
            )
    return Phi, Theta @ plant.B


def build_switched_model(sd, check=True):
    """Switched model of ``sd``: mode ``i`` is the ZOH step for the ``i``-th
    smallest interval, all modes sharing the plant's ``C``."""
    if not isinstance(sd, SampledDataSystem):
        raise TypeError("expected a SampledDataSystem")
    ensure_valid(sd)
    modes = tuple(step_matrices(sd.plant, h, check=check) for h in sd.grid)
    return SwitchedLinearSystem(modes, sd.plant.C.copy(), grid=sd.grid)
