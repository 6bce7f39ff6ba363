"""System classes: continuous LTI plants, sampling grids, sampled-data
systems and discrete-time linear switched systems.

Constructors only coerce to float arrays; :func:`validate` reports every
invariant violation and never raises.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .matops import spectral_abscissa

DUPLICATE_RTOL = 1e-12


def _arr(M):
    return np.array(M, dtype=float, ndmin=2) if np.ndim(M) < 2 else np.array(M, dtype=float)


@dataclass(frozen=True, eq=False)
class ContinuousLtiSystem:
    """Plant ``dx/dt = A x + B u``, ``y = C x``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C"):
            object.__setattr__(self, name, _arr(getattr(self, name)))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]


@dataclass(frozen=True, eq=False)
class SamplingGrid:
    """Finite set of admissible sampling intervals, kept sorted ascending.

    Mode ``i`` (1-based) of a discretized model always refers to the
    ``i``-th smallest interval.
    """

    intervals: tuple

    def __post_init__(self):
        vals = tuple(sorted(float(h) for h in np.ravel(self.intervals)))
        object.__setattr__(self, "intervals", vals)

    @property
    def D(self):
        return len(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __getitem__(self, i):
        return self.intervals[i]

    def __eq__(self, other):
        return isinstance(other, SamplingGrid) and self.intervals == other.intervals

    def __hash__(self):
        return hash(self.intervals)

    @classmethod
    def parse(cls, text):
        """Build a grid from a comma-separated string such as ``"1,1.5,2,3"``."""
        parts = [s.strip() for s in str(text).split(",") if s.strip()]
        return cls(tuple(float(s) for s in parts))


@dataclass(frozen=True, eq=False)
class SampledDataSystem:
    plant: ContinuousLtiSystem
    grid: SamplingGrid


@dataclass(frozen=True, eq=False)
class SwitchedLinearSystem:
    """Discrete-time switched model ``x+ = A_s x + B_s u``, ``y = C x``.

    ``modes`` holds ``(A_i, B_i)`` pairs; ``grid`` (optional) records the
    sampling interval each mode was built from.
    """

    modes: tuple
    C: np.ndarray
    grid: Optional[SamplingGrid] = None

    def __post_init__(self):
        modes = tuple((_arr(A), _arr(B)) for A, B in self.modes)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "C", _arr(self.C))

    @property
    def D(self):
        return len(self.modes)

    @property
    def n(self):
        return self.C.shape[1]

    @property
    def m(self):
        return self.modes[0][1].shape[1] if self.modes else 0

    @property
    def p(self):
        return self.C.shape[0]

    @property
    def A_modes(self):
        return [A for A, _ in self.modes]

    @property
    def B_modes(self):
        return [B for _, B in self.modes]


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def _finite(name, M, out):
    if not np.all(np.isfinite(M)):
        out.append(Violation("non_finite", f"{name} has non-finite entries"))


def _validate_lti(sys, out):
    A, B, C = sys.A, sys.B, sys.C
    for name, M in (("A", A), ("B", B), ("C", C)):
        if M.ndim != 2:
            out.append(Violation("not_matrix", f"{name} is not 2-D (shape {M.shape})"))
            return
        if 0 in M.shape:
            out.append(Violation("empty_matrix", f"{name} has an empty dimension {M.shape}"))
        _finite(name, M, out)
    if A.shape[0] != A.shape[1]:
        out.append(Violation("not_square", f"A must be square, got {A.shape}"))
    n = A.shape[0]
    if B.shape[0] != n:
        out.append(Violation("shape_mismatch", f"B has {B.shape[0]} rows, expected n={n}"))
    if C.shape[1] != n:
        out.append(Violation("shape_mismatch", f"C has {C.shape[1]} columns, expected n={n}"))


def _validate_grid(grid, out):
    h = np.asarray(grid.intervals, dtype=float)
    if h.size == 0:
        out.append(Violation("empty_grid", "sampling grid has no intervals (D >= 1 required)"))
        return
    if not np.all(np.isfinite(h)):
        out.append(Violation("non_finite", "sampling grid has non-finite intervals"))
        return
    if np.any(h <= 0):
        bad = ", ".join(f"{x:g}" for x in h[h <= 0])
        out.append(Violation("nonpositive_interval", f"sampling intervals must be > 0, got {bad}"))
    for a, b in zip(h[:-1], h[1:]):
        if abs(b - a) <= DUPLICATE_RTOL * max(abs(a), abs(b)):
            out.append(Violation("duplicate_interval", f"sampling interval {a:g} appears twice"))


def _validate_ls(sys, out):
    if sys.D == 0:
        out.append(Violation("no_modes", "switched system needs at least one mode"))
    C = sys.C
    if C.ndim != 2:
        out.append(Violation("not_matrix", f"C is not 2-D (shape {C.shape})"))
        return
    _finite("C", C, out)
    n = C.shape[1]
    m = None
    for i, (A, B) in enumerate(sys.modes, start=1):
        if A.ndim != 2 or B.ndim != 2:
            out.append(Violation("not_matrix", f"mode {i} matrices are not 2-D"))
            continue
        _finite(f"A_{i}", A, out)
        _finite(f"B_{i}", B, out)
        if A.shape != (n, n):
            out.append(Violation("mode_dimension_mismatch", f"A_{i} has shape {A.shape}, expected {(n, n)}"))
        if B.shape[0] != n:
            out.append(Violation("mode_dimension_mismatch", f"B_{i} has {B.shape[0]} rows, expected {n}"))
        if m is None:
            m = B.shape[1]
        elif B.shape[1] != m:
            out.append(Violation("mode_dimension_mismatch", f"B_{i} has {B.shape[1]} columns, expected {m}"))
    if sys.grid is not None:
        _validate_grid(sys.grid, out)
        if sys.grid.D != sys.D:
            out.append(Violation("grid_mode_count", f"grid has {sys.grid.D} intervals but system has {sys.D} modes"))


def validate(system):
    """Every invariant violation of ``system`` (empty list when well formed).

    Never raises; an unrecognized object is itself reported as a violation.
    """
    out = []
    try:
        if isinstance(system, ContinuousLtiSystem):
            _validate_lti(system, out)
        elif isinstance(system, SamplingGrid):
            _validate_grid(system, out)
        elif isinstance(system, SampledDataSystem):
            _validate_lti(system.plant, out)
            _validate_grid(system.grid, out)
        elif isinstance(system, SwitchedLinearSystem):
            _validate_ls(system, out)
        else:
            out.append(Violation("unknown_type", f"cannot validate object of type {type(system).__name__}"))
    except Exception as exc:  # validate is total
        out.append(Violation("malformed", f"{type(exc).__name__}: {exc}"))
    return out


def ensure_valid(system):
    violations = validate(system)
    if violations:
        raise ValidationError(violations)
    return system


def is_hurwitz(plant):
    """``(stable, abscissa)``: stable iff every eigenvalue of A has Re < 0.

    Marginal cases (abscissa exactly 0) count as not stable.
    """
    A = plant.A if isinstance(plant, ContinuousLtiSystem) else np.asarray(plant, dtype=float)
    abscissa, _ = spectral_abscissa(A)
    return abscissa < 0, abscissa


def real_schur_from_spectrum(spectrum, rng=None, coupling=0.0):
    """Quasi-upper-triangular matrix with the given eigenvalues.

    Complex eigenvalues must come in conjugate pairs; each pair a +- bi
    becomes the 2x2 block [[a, b], [-b, a]]. With ``coupling > 0`` the
    strictly block-upper part is filled with scaled Gaussian entries,
    which leaves the spectrum unchanged.
    """
    eig = [complex(z) for z in spectrum]
    blocks = []
    used = [False] * len(eig)
    for i, z in enumerate(eig):
        if used[i]:
            continue
        used[i] = True
        if abs(z.imag) == 0.0:
            blocks.append(np.array([[z.real]]))
            continue
        for j in range(i + 1, len(eig)):
            if not used[j] and np.isclose(eig[j], z.conjugate(), rtol=1e-12, atol=1e-14):
                used[j] = True
                break
        else:
            raise ValueError(f"eigenvalue {z} has no conjugate partner")
        a, b = z.real, abs(z.imag)
        blocks.append(np.array([[a, b], [-b, a]]))
    n = sum(b.shape[0] for b in blocks)
    T = np.zeros((n, n))
    starts = []
    k = 0
    for b in blocks:
        s = b.shape[0]
        T[k:k + s, k:k + s] = b
        starts.append((k, s))
        k += s
    if coupling and rng is not None:
        for bi, (k0, s0) in enumerate(starts):
            for k1, s1 in starts[bi + 1:]:
                T[k0:k0 + s0, k1:k1 + s1] = coupling * rng.standard_normal((s0, s1))
    return T


def random_orthogonal(n, rng):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def random_spectrum(n, rng, real_range=(-2.0, -0.1), imag_max=3.0, complex_fraction=0.5, unstable=0):
    """Random self-conjugate spectrum of size ``n``.

    Roughly ``complex_fraction`` of the eigenvalues come in conjugate
    pairs. The first ``unstable`` real parts are mirrored into the right
    half-plane.
    """
    lo, hi = real_range
    out = []
    while len(out) < n:
        if n - len(out) >= 2 and rng.random() < complex_fraction:
            a = rng.uniform(lo, hi)
            b = rng.uniform(0.05, imag_max)
            out += [complex(a, b), complex(a, -b)]
        else:
            out.append(complex(rng.uniform(lo, hi), 0.0))
    flipped = 0
    i = 0
    while flipped < unstable and i < len(out):
        z = out[i]
        if z.imag == 0.0:
            out[i] = complex(-z.real, 0.0)
            flipped += 1
            i += 1
        else:
            out[i] = complex(-z.real, z.imag)
            out[i + 1] = complex(-z.real, -z.imag)
            flipped += 2
            i += 2
    return out


def random_plant(n, m=1, p=1, rng=None, spectrum=None, coupling=0.3, **spectrum_kw):
    """Random plant whose state matrix has a prescribed (or random) spectrum.

    ``A = Q T Q^T`` with ``T`` in real Schur form and ``Q`` a random
    orthogonal matrix; ``B`` and ``C`` are standard Gaussian.
    """
    rng = np.random.default_rng(rng)
    if spectrum is None:
        spectrum = random_spectrum(n, rng, **spectrum_kw)
    if len(spectrum) != n:
        raise ValueError(f"spectrum has {len(spectrum)} entries, expected n={n}")
    T = real_schur_from_spectrum(spectrum, rng, coupling=coupling)
    Q = random_orthogonal(n, rng)
    A = Q @ T @ Q.T
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    return ContinuousLtiSystem(A, B, C)
