"""The two end-to-end reduction routes for aperiodically sampled plants.

``approach_one`` reduces the continuous plant by moment matching and then
discretizes the reduced plant over the grid. ``approach_two`` discretizes
first and reduces the resulting switched model. Both return the reduced
switched model together with a :class:`ReductionReport`.
"""
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .discretize import build_switched_model
from .errors import ConsistencyError, InfeasibleRequestError, NotHurwitzError
from .matops import DEFAULT_RANK_TOL
from .mm_lti import (
    ProjectionReduction,
    choose_horizon,
    krylov_levels,
    markov_residuals_lti,
    reduce_lti,
)
from .mm_ls import MARKOV_CAP, ls_levels, markov_residuals_ls, max_length_within, reduce_ls
from .stability import (
    Refutation,
    certify_reduction,
    check_quadratic_stability,
    lyapunov_from_plant,
    stability_preserving_left_inverse,
)
from .systems import SampledDataSystem, ensure_valid, is_hurwitz

RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class ReductionRequest:
    """Either a fixed moment horizon ``moments`` or an order budget ``max_order``."""

    moments: Optional[int] = None
    max_order: Optional[int] = None

    def __post_init__(self):
        if (self.moments is None) == (self.max_order is None):
            raise ValueError("give exactly one of moments (N) or max_order (r_max)")
        if self.moments is not None and self.moments < 0:
            raise ValueError("moments must be >= 0")

    def to_dict(self):
        return {"moments": self.moments, "max_order": self.max_order}


@dataclass
class ReductionReport:
    approach: int
    n: int
    r: int
    N: int
    D: int
    grid: tuple
    left_inverse_kind: str
    dims_per_level: list
    saturated: bool
    markov_match_residuals: dict
    residual_kind: str
    certificate: Optional[object] = None
    plant_hurwitz: bool = False
    plant_abscissa: float = float("nan")
    notices: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_dict(self, include_timings=False):
        out = {
            "approach": self.approach,
            "n": self.n,
            "r": self.r,
            "N": self.N,
            "D": self.D,
            "grid": list(self.grid),
            "left_inverse_kind": self.left_inverse_kind,
            "dims_per_level": list(self.dims_per_level),
            "saturated": self.saturated,
            "residual_kind": self.residual_kind,
            "markov_match_residuals": {str(k): v for k, v in self.markov_match_residuals.items()},
            "plant_hurwitz": self.plant_hurwitz,
            "plant_abscissa": self.plant_abscissa,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "notices": list(self.notices),
        }
        if include_timings:
            out["timings"] = dict(self.timings)
        return out


class _Stopwatch:
    def __init__(self):
        self.timings = {}

    def stage(self, name):
        sw = self

        class _Stage:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                sw.timings[name] = sw.timings.get(name, 0.0) + time.perf_counter() - self.t0

        return _Stage()


def _pick_horizon(dims, request, n, what):
    if request.moments is not None:
        N = request.moments
        return N, len(dims) - 1 < N
    choice = choose_horizon(dims, request.max_order, N_cap=n)
    if choice is None:
        raise InfeasibleRequestError(
            f"requested order {request.max_order} is below dim R^0 = {dims[0]} of the {what} reachability space"
        )
    return choice


def _stable_inverse_flag(stable_inverse, hurwitz, abscissa):
    if stable_inverse is None:
        return hurwitz
    if stable_inverse and not hurwitz:
        raise NotHurwitzError(
            complex(abscissa, 0.0),
            f"stability-preserving inverse needs a Hurwitz plant (spectral abscissa {abscissa:.6g})",
        )
    return bool(stable_inverse)


def _projection(V, N, P, use_stable):
    if V.shape[1] == V.shape[0]:
        # full space: the identity is a valid basis, and with it both left
        # inverses are exactly I, so the "reduced" model is the original bit for bit
        n = V.shape[0]
        kind = "lyapunov_weighted" if use_stable else "pseudoinverse"
        return ProjectionReduction(np.eye(n), np.eye(n), N, kind)
    if use_stable:
        return ProjectionReduction(V, stability_preserving_left_inverse(V, P), N, "lyapunov_weighted")
    return ProjectionReduction.orthogonal(V, N)


def approach_one(sd, request, stable_inverse=None, rank_tol=DEFAULT_RANK_TOL):
    """Reduce the plant (moment matching on ``C A^k B``), then discretize.

    ``stable_inverse`` selects the Lyapunov-weighted left inverse; by
    default it is used exactly when the plant is Hurwitz. For a Hurwitz
    plant a certificate from the reduced plant's own Lyapunov equation is
    attached.
    """
    if not isinstance(sd, SampledDataSystem):
        raise TypeError("expected a SampledDataSystem")
    ensure_valid(sd)
    sw = _Stopwatch()
    plant = sd.plant
    hurwitz, abscissa = is_hurwitz(plant)
    use_stable = _stable_inverse_flag(stable_inverse, hurwitz, abscissa)
    notices = []

    with sw.stage("reachability"):
        N_build = request.moments if request.moments is not None else plant.n
        V_all, dims = krylov_levels(plant.A, plant.B, N_build, rank_tol)
        N, saturated = _pick_horizon(dims, request, plant.n, "LTI")
        V = V_all[:, :dims[min(N, len(dims) - 1)]]
    P = None
    with sw.stage("projection"):
        if use_stable:
            P = lyapunov_from_plant(plant)
        proj = _projection(V, N, P, use_stable)
        reduced_plant = reduce_lti(plant, proj)
    with sw.stage("residuals"):
        res = markov_residuals_lti(plant, reduced_plant, N)
        worst = max(res)
        if worst > RESIDUAL_TOL:
            raise ConsistencyError(f"reduced plant misses Markov parameters up to N={N} (residual {worst:.3e})")
    with sw.stage("discretize"):
        reduced = build_switched_model(SampledDataSystem(reduced_plant, sd.grid))

    certificate = None
    with sw.stage("certify"):
        if hurwitz:
            red_ok, red_abscissa = is_hurwitz(reduced_plant)
            if red_ok:
                Pbar = lyapunov_from_plant(reduced_plant)
                cert = check_quadratic_stability(reduced, Pbar)
                if isinstance(cert, Refutation):
                    raise ConsistencyError(f"reduced plant is Hurwitz but its Lyapunov matrix fails: {cert.reason}")
                certificate = cert
            else:
                notices.append(
                    "stability not preserved: the reduced plant is not Hurwitz "
                    f"(spectral abscissa {red_abscissa:.6g}); numerical moment matching can "
                    "destabilize a reduction when the pseudoinverse is used"
                )
        else:
            notices.append(f"no certificate available: plant is not Hurwitz (spectral abscissa {abscissa:.6g})")
    if saturated:
        notices.append(f"reachability space stationary from level {N}: the reduction matches every Markov parameter")

    report = ReductionReport(
        approach=1,
        n=plant.n,
        r=proj.r,
        N=N,
        D=sd.grid.D,
        grid=sd.grid.intervals,
        left_inverse_kind=proj.left_inverse_kind,
        dims_per_level=dims,
        saturated=saturated,
        markov_match_residuals={k: r for k, r in enumerate(res)},
        residual_kind="lti_markov_index",
        certificate=certificate,
        plant_hurwitz=hurwitz,
        plant_abscissa=abscissa,
        notices=notices,
        timings=sw.timings,
    )
    return reduced, report


def approach_two(sd, request, stable_inverse=None, rank_tol=DEFAULT_RANK_TOL, markov_cap=MARKOV_CAP):
    """Discretize the plant over the grid, then reduce the switched model.

    For a Hurwitz plant with the stability-preserving inverse the
    certificate is ``V^T P V`` with ``P`` from the plant's Lyapunov
    equation.
    """
    if not isinstance(sd, SampledDataSystem):
        raise TypeError("expected a SampledDataSystem")
    ensure_valid(sd)
    sw = _Stopwatch()
    plant = sd.plant
    hurwitz, abscissa = is_hurwitz(plant)
    use_stable = _stable_inverse_flag(stable_inverse, hurwitz, abscissa)
    notices = []

    with sw.stage("discretize"):
        ls = build_switched_model(sd)
    with sw.stage("reachability"):
        N_build = request.moments if request.moments is not None else plant.n
        V_all, dims = ls_levels(ls, N_build, rank_tol)
        N, saturated = _pick_horizon(dims, request, plant.n, "switched")
        V = V_all[:, :dims[min(N, len(dims) - 1)]]
    P = None
    with sw.stage("projection"):
        if use_stable or hurwitz:
            P = lyapunov_from_plant(plant)
        proj = _projection(V, N, P, use_stable)
        reduced = reduce_ls(ls, proj)
    with sw.stage("residuals"):
        checked = min(N, max_length_within(ls.D, markov_cap))
        res = markov_residuals_ls(ls, reduced, checked, cap=markov_cap)
        worst = max(res)
        if worst > RESIDUAL_TOL:
            raise ConsistencyError(
                f"reduced model misses switched Markov parameters up to length {checked} (residual {worst:.3e})"
            )
        if checked < N:
            notices.append(f"switched Markov residuals checked up to length {checked} of {N} (enumeration cap)")

    certificate = None
    with sw.stage("certify"):
        if hurwitz and use_stable:
            certificate = certify_reduction(ls, P, proj, reduced=reduced)
        elif hurwitz:
            Pbar = proj.V.T @ P @ proj.V
            cert = check_quadratic_stability(reduced, Pbar)
            if isinstance(cert, Refutation):
                notices.append(f"stability not certified with the pseudoinverse: {cert.reason}")
            else:
                certificate = cert
        else:
            notices.append(f"no certificate available: plant is not Hurwitz (spectral abscissa {abscissa:.6g})")
    if saturated:
        notices.append(f"reachability space stationary from level {N}: every switched Markov parameter matches")

    report = ReductionReport(
        approach=2,
        n=plant.n,
        r=proj.r,
        N=N,
        D=sd.grid.D,
        grid=sd.grid.intervals,
        left_inverse_kind=proj.left_inverse_kind,
        dims_per_level=dims,
        saturated=saturated,
        markov_match_residuals={k: r for k, r in enumerate(res)},
        residual_kind="switched_markov_length",
        certificate=certificate,
        plant_hurwitz=hurwitz,
        plant_abscissa=abscissa,
        notices=notices,
        timings=sw.timings,
    )
    return reduced, report


APPROACHES = {1: approach_one, 2: approach_two}


def reduce(sd, request, approach, **kw):
    return APPROACHES[int(approach)](sd, request, **kw)


def recheck_certificate(reduced, certificate):
    """Recompute the certificate from scratch on ``reduced``."""
    if certificate is None:
        return None
    return check_quadratic_stability(reduced, np.array(certificate.P, copy=True))
