"""Trajectories of switched models, seeded input/switching generation and
the best-fit-rate metric.

Randomness comes only from ``numpy.random.Generator`` streams (PCG64 bit
generator, ziggurat Gaussian sampler) keyed by ``(seed, trial index)``,
so a campaign is reproducible from its seed alone.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, UndefinedBFRError

OVERFLOW_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class SwitchingSequence:
    """Mode indices ``sigma_0 .. sigma_K``, each in ``1..D``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64).reshape(-1)
        if v.size == 0:
            raise ValueError("switching sequence must have at least one entry")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class InputSequence:
    """Held inputs ``u_0 .. u_K`` stored as a ``(K + 1, m)`` array."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        object.__setattr__(self, "values", v)

    def __len__(self):
        return int(self.values.shape[0])


@dataclass(frozen=True, eq=False)
class OutputTrace:
    t: np.ndarray
    y: np.ndarray
    x: Optional[np.ndarray] = None
    flagged: bool = False

    @property
    def K(self):
        return self.y.shape[0] - 1


@dataclass(frozen=True)
class SwitchingDistribution:
    """How mode indices are drawn.

    With neither field set draws are i.i.d. uniform on ``1..D``;
    ``weights`` gives i.i.d. draws with those probabilities; ``transition``
    (row-stochastic ``D x D``, first state uniform) gives a Markov chain.
    """

    weights: Optional[tuple] = None
    transition: Optional[tuple] = None

    def describe(self):
        if self.transition is not None:
            return "markov_chain"
        if self.weights is not None:
            return "iid_weighted"
        return "iid_uniform"

    def first(self, rng, D):
        if self.weights is not None and self.transition is None:
            return int(rng.choice(D, p=np.asarray(self.weights, dtype=float))) + 1
        return int(rng.integers(1, D + 1))

    def next(self, rng, D, prev):
        if self.transition is not None:
            row = np.asarray(self.transition, dtype=float)[prev - 1]
            return int(rng.choice(D, p=row)) + 1
        return self.first(rng, D)


UNIFORM = SwitchingDistribution()


def simulate_ls(sys, u, sigma, x0=None, keep_states=False, intervals=None):
    """Run ``x_{k+1} = A_{s_k} x_k + B_{s_k} u_k``, ``y_k = C x_k`` for
    ``k = 0..K``.

    ``u`` and ``sigma`` must have the same length ``K + 1``; ``x0``
    defaults to zero. Sampling instants use ``intervals`` (or the system's
    grid); without either, ``t_k = k``. Traces whose output norm exceeds
    1e12 or turns non-finite come back with ``flagged=True``.
    """
    U = u.values if isinstance(u, InputSequence) else InputSequence(u).values
    S = sigma.values if isinstance(sigma, SwitchingSequence) else SwitchingSequence(sigma).values
    if U.shape[0] != S.size:
        raise DimensionError(f"|u| = {U.shape[0]} but |sigma| = {S.size}")
    if U.shape[1] != sys.m:
        raise DimensionError(f"inputs have dimension {U.shape[1]}, system expects m={sys.m}")
    if S.min() < 1 or S.max() > sys.D:
        raise DimensionError(f"switching indices must lie in 1..{sys.D}")
    n = sys.n
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    K = S.size - 1
    C = sys.C
    A = [M for M, _ in sys.modes]
    B = [M for _, M in sys.modes]
    y = np.empty((K + 1, sys.p))
    xs = np.empty((K + 1, n)) if keep_states else None
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(K + 1):
            y[k] = C @ x
            if keep_states:
                xs[k] = x
            if k < K:
                i = S[k] - 1
                x = A[i] @ x + B[i] @ U[k]
    norms = np.linalg.norm(y, axis=1)
    flagged = bool(not np.all(np.isfinite(norms)) or np.any(norms > OVERFLOW_LIMIT))

    if intervals is None and sys.grid is not None:
        intervals = sys.grid.intervals
    if intervals is None:
        t = np.arange(K + 1, dtype=float)
    else:
        steps = np.asarray(intervals, dtype=float)[S[:-1] - 1]
        t = np.concatenate([[0.0], np.cumsum(steps)])
    return OutputTrace(t=t, y=y, x=xs, flagged=flagged)


def trial_rng(seed, index):
    """Independent generator for trial ``index`` of a campaign seeded by ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def horizon_to_length(grid, rng, T_total, distribution=UNIFORM):
    """Draw modes until the elapsed time first reaches ``T_total``.

    Returns ``(K, modes)`` where ``modes`` has ``K + 1`` entries: the
    ``K`` steps that cover the horizon plus the (unused for outputs) mode
    at the final instant, so that ``|u| = |sigma|``.
    """
    if T_total <= 0:
        raise ValueError("time horizon must be positive")
    h = grid.intervals
    D = len(h)
    modes = [distribution.first(rng, D)]
    elapsed = h[modes[0] - 1]
    while elapsed < T_total:
        modes.append(distribution.next(rng, D, modes[-1]))
        elapsed += h[modes[-1] - 1]
    K = len(modes)
    modes.append(distribution.next(rng, D, modes[-1]))
    return K, np.asarray(modes, dtype=np.int64)


def expected_length(grid, T_total):
    """Rough ``T / mean(h)`` estimate of K under uniform switching."""
    return T_total / float(np.mean(grid.intervals))


def _draw_switching(rng, K, D, distribution):
    modes = [distribution.first(rng, D)]
    for _ in range(K):
        modes.append(distribution.next(rng, D, modes[-1]))
    return np.asarray(modes, dtype=np.int64)


def generate_campaign_sequences(seed, K, D, m, count, distribution=UNIFORM):
    """``count`` pairs of (inputs, switching) of fixed length ``K + 1``.

    Inputs are i.i.d. standard normal per coordinate.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    out = []
    for i in range(count):
        rng = trial_rng(seed, i)
        sigma = _draw_switching(rng, K, D, distribution)
        u = rng.standard_normal((K + 1, m))
        out.append((InputSequence(u), SwitchingSequence(sigma)))
    return out


def generate_horizon_sequences(seed, grid, T_total, m, count, distribution=UNIFORM):
    """Like :func:`generate_campaign_sequences` but with ``K`` drawn per
    trial from the time horizon."""
    if count < 1:
        raise ValueError("count must be >= 1")
    out = []
    for i in range(count):
        out.append(horizon_sequence(seed, i, grid, T_total, m, distribution))
    return out


def horizon_sequence(seed, index, grid, T_total, m, distribution=UNIFORM):
    rng = trial_rng(seed, index)
    K, sigma = horizon_to_length(grid, rng, T_total, distribution)
    u = rng.standard_normal((K + 1, m))
    return InputSequence(u), SwitchingSequence(sigma)


def bfr(y, ybar):
    """Best fit rate in percent.

    ``100 * max(1 - ||y - ybar|| / ||y - mean(y)||, 0)`` with norms taken
    over all samples and output channels.
    """
    Y = np.asarray(y.y if isinstance(y, OutputTrace) else y, dtype=float)
    Yb = np.asarray(ybar.y if isinstance(ybar, OutputTrace) else ybar, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Yb.ndim == 1:
        Yb = Yb[:, None]
    if Y.shape != Yb.shape:
        raise DimensionError(f"output shapes differ: {Y.shape} vs {Yb.shape}")
    num = np.sqrt(np.sum((Y - Yb) ** 2))
    den = np.sqrt(np.sum((Y - Y.mean(axis=0)) ** 2))
    if den == 0.0:
        raise UndefinedBFRError("reference output is constant; BFR is undefined")
    return 100.0 * max(1.0 - num / den, 0.0)
