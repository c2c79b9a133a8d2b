"""Measurement ensembles and the intensity observation model.

Two ensembles are supported:

* ``GaussianEnsemble`` stores the m sampling vectors ``a_r`` densely.  Row r of
  the sensing matrix is ``a_r^*`` so ``forward(z)[r] = <a_r, z>``.
* ``CdpEnsemble`` stores L modulation codes ``d_l``.  Measurement
  ``r = l*n + k`` is the k-th unnormalised DFT coefficient of
  ``conj(d_l) * z``; the adjoint uses the conjugate kernel without a 1/n
  factor.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DimensionError, PreconditionError, _generator, as_vector, frozen, sample_complex_gaussian

ADMISSIBILITY_TOL = 1e-12


# -- modulation distributions ------------------------------------------------


@dataclass(frozen=True)
class PatternDistribution:
    """Finite distribution of the modulation variable ``d``."""

    values: tuple
    probs: tuple
    name: str = "custom"

    def __post_init__(self):
        if len(self.values) == 0:
            raise PreconditionError("pattern distribution needs at least one atom")
        if len(self.values) != len(self.probs):
            raise PreconditionError("values and probabilities differ in length")
        probs = np.asarray(self.probs, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if np.any(probs <= 0) or not np.all(np.isfinite(probs)):
            raise PreconditionError("atom probabilities must be positive")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise PreconditionError(f"atom probabilities sum to {probs.sum()!r}, not 1")
        if not np.all(np.isfinite(values)):
            raise PreconditionError("atom values must be finite")

    @classmethod
    def from_atoms(cls, atoms, name="custom"):
        """Build from an iterable of ``(value, probability)`` pairs."""
        atoms = list(atoms)
        return cls(tuple(complex(v) for v, _ in atoms), tuple(float(p) for _, p in atoms), name)

    @property
    def atoms(self):
        return list(zip(self.values, self.probs))


def _octanary() -> PatternDistribution:
    atoms = []
    for b1 in (1, -1, -1j, 1j):
        for b2, p2 in ((np.sqrt(2) / 2, 4 / 5), (np.sqrt(3), 1 / 5)):
            atoms.append((b1 * b2, p2 / 4))
    return PatternDistribution.from_atoms(atoms, "octanary")


OCTANARY = _octanary()
TERNARY = PatternDistribution((1.0, 0.0, -1.0), (0.25, 0.5, 0.25), "ternary")

PATTERNS = {"octanary": OCTANARY, "ternary": TERNARY}


def parse_atoms(text: str) -> PatternDistribution:
    """Parse ``"re,im,prob;re,im,prob;..."`` into a custom distribution."""
    atoms = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 3:
            raise ValueError(f"atom {chunk!r} must be 're,im,prob'")
        re_, im_, prob = (float(p) for p in parts)
        atoms.append((complex(re_, im_), prob))
    return PatternDistribution.from_atoms(atoms)


@dataclass(frozen=True)
class MomentReport:
    mean: complex
    second_moment_d2: complex
    abs2: float
    abs4: float
    max_abs: float
    symmetric: bool
    admissible: bool
    failures: tuple = ()

    def as_dict(self) -> dict:
        return {
            "mean": [self.mean.real, self.mean.imag],
            "second_moment_d2": [self.second_moment_d2.real, self.second_moment_d2.imag],
            "abs2": self.abs2,
            "abs4": self.abs4,
            "max_abs": self.max_abs,
            "symmetric": self.symmetric,
            "admissible": self.admissible,
            "failures": list(self.failures),
        }


def _merged_atoms(values, probs, tol):
    merged: list[list] = []
    for v, p in zip(values, probs):
        for entry in merged:
            if abs(entry[0] - v) <= tol:
                entry[1] += p
                break
        else:
            merged.append([v, p])
    return merged


def _is_symmetric(values, probs, tol) -> bool:
    # d and -d must have the same law: the merged atom table is closed under negation.
    merged = _merged_atoms(values, probs, tol)
    for v, p in merged:
        if not any(abs(w + v) <= tol and abs(q - p) <= tol for w, q in merged):
            return False
    return True


def pattern_moments(dist: PatternDistribution, tol: float = ADMISSIBILITY_TOL) -> MomentReport:
    """Exact moments of ``d`` by enumeration, plus the admissibility verdict."""
    values = np.asarray(dist.values, dtype=complex)
    probs = np.asarray(dist.probs, dtype=float)
    mag2 = np.abs(values) ** 2
    mean = complex(np.sum(probs * values))
    d2 = complex(np.sum(probs * values**2))
    abs2 = float(np.sum(probs * mag2))
    abs4 = float(np.sum(probs * mag2**2))
    max_abs = float(np.max(np.abs(values)))
    symmetric = _is_symmetric(values, probs, tol)

    failures = []
    if abs(mean) > tol:
        failures.append("mean")
    if abs(d2) > tol:
        failures.append("second_moment_d2")
    if abs(abs4 - 2 * abs2**2) > tol:
        failures.append("fourth_moment")
    if not symmetric:
        failures.append("symmetric")
    if not np.isfinite(max_abs):
        failures.append("bounded")
    if abs2 <= tol:
        failures.append("degenerate")
    return MomentReport(mean, d2, abs2, abs4, max_abs, symmetric, not failures, tuple(failures))


def sample_pattern(dist: PatternDistribution, n: int, rng, size: int | None = None) -> np.ndarray:
    """Draw ``n`` i.i.d. entries (or a ``(size, n)`` array) from ``dist``."""
    if n < 1 or (size is not None and size < 1):
        raise DimensionError(f"dimensions must be positive, got n={n}, size={size}")
    gen = _generator(rng)
    shape = n if size is None else (size, n)
    idx = gen.choice(len(dist.values), size=shape, p=np.asarray(dist.probs))
    return np.asarray(dist.values, dtype=np.complex128)[idx]


# -- ensembles ----------------------------------------------------------------


def _check_length(v: np.ndarray, expected: int, label: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    if v.shape != (expected,):
        raise DimensionError(f"{label} must have length {expected}, got shape {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class GaussianEnsemble:
    """Dense ensemble; ``vectors[r]`` is the sampling vector ``a_r``."""

    vectors: np.ndarray
    _matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=np.complex128, order="C")
        if vectors.ndim != 2 or 0 in vectors.shape:
            raise DimensionError(f"sampling vectors must form a non-empty m x n array, got {vectors.shape}")
        if not np.all(np.isfinite(vectors)):
            raise PreconditionError("sampling vectors contain non-finite entries")
        object.__setattr__(self, "vectors", frozen(vectors))
        # rows a_r^*: the sensing matrix A
        object.__setattr__(self, "_matrix", frozen(np.ascontiguousarray(vectors.conj())))

    kind = "gaussian"

    @property
    def n(self) -> int:
        return self.vectors.shape[1]

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def ffts_per_apply(self) -> int:
        return 0

    def forward(self, z) -> np.ndarray:
        return self._matrix @ _check_length(z, self.n, "z")

    def adjoint(self, v) -> np.ndarray:
        return self.vectors.T @ _check_length(v, self.m, "v")

    def row_norms_sq(self) -> np.ndarray:
        return np.sum(self.vectors.real**2 + self.vectors.imag**2, axis=1)

    def total_row_norm_sq(self) -> float:
        return float(np.sum(self.row_norms_sq()))

    def matrix(self) -> np.ndarray:
        """Dense sensing matrix with rows ``a_r^*``."""
        return self._matrix.copy()

    def take(self, rows) -> "GaussianEnsemble":
        return GaussianEnsemble(self.vectors[rows])


@dataclass(frozen=True, eq=False)
class CdpEnsemble:
    """Coded diffraction ensemble; ``codes[l]`` is the pattern ``d_l``."""

    codes: np.ndarray
    _conj_codes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        codes = np.array(self.codes, dtype=np.complex128, order="C")
        if codes.ndim == 1:
            codes = codes[None, :]
        if codes.ndim != 2 or 0 in codes.shape:
            raise DimensionError(f"codes must form a non-empty L x n array, got {codes.shape}")
        if not np.all(np.isfinite(codes)):
            raise PreconditionError("codes contain non-finite entries")
        object.__setattr__(self, "codes", frozen(codes))
        object.__setattr__(self, "_conj_codes", frozen(codes.conj()))

    kind = "cdp"

    @property
    def n(self) -> int:
        return self.codes.shape[1]

    @property
    def L(self) -> int:
        return self.codes.shape[0]

    @property
    def m(self) -> int:
        return self.n * self.L

    @property
    def ffts_per_apply(self) -> int:
        return self.L

    def forward(self, z) -> np.ndarray:
        z = _check_length(z, self.n, "z")
        return np.fft.fft(self._conj_codes * z, axis=1).ravel()

    def adjoint(self, v) -> np.ndarray:
        blocks = _check_length(v, self.m, "v").reshape(self.L, self.n)
        # norm="forward" puts 1/n on the forward transform, leaving ifft unscaled
        return np.sum(self.codes * np.fft.ifft(blocks, axis=1, norm="forward"), axis=0)

    def row_norms_sq(self) -> np.ndarray:
        per_code = np.sum(np.abs(self.codes) ** 2, axis=1)
        return np.repeat(per_code, self.n)

    def total_row_norm_sq(self) -> float:
        return float(self.n * np.sum(np.abs(self.codes) ** 2))

    def matrix(self) -> np.ndarray:
        """Dense sensing matrix (m x n); only sensible for small n."""
        t = np.arange(self.n)
        kernel = np.exp(-2j * np.pi * np.outer(t, t) / self.n)
        return np.concatenate([kernel * self._conj_codes[l][None, :] for l in range(self.L)])

    def take(self, patterns) -> "CdpEnsemble":
        return CdpEnsemble(self.codes[patterns])


class CountingEnsemble:
    """Wraps an ensemble and counts forward/adjoint applications."""

    def __init__(self, ensemble):
        self.ensemble = ensemble
        self.forward_calls = 0
        self.adjoint_calls = 0

    def __getattr__(self, name):
        return getattr(self.ensemble, name)

    def forward(self, z):
        self.forward_calls += 1
        return self.ensemble.forward(z)

    def adjoint(self, v):
        self.adjoint_calls += 1
        return self.ensemble.adjoint(v)

    @property
    def fft_count(self) -> int:
        return self.ensemble.ffts_per_apply * (self.forward_calls + self.adjoint_calls)


def sample_gaussian_ensemble(n: int, m: int, rng) -> GaussianEnsemble:
    if n < 1 or m < 1:
        raise DimensionError(f"n and m must be positive, got n={n}, m={m}")
    return GaussianEnsemble(sample_complex_gaussian(n, rng, size=m))


def sample_cdp_ensemble(n: int, L: int, dist: PatternDistribution, rng) -> CdpEnsemble:
    if n < 1 or L < 1:
        raise DimensionError(f"n and L must be positive, got n={n}, L={L}")
    return CdpEnsemble(sample_pattern(dist, n, rng, size=L))


def forward(ensemble, z) -> np.ndarray:
    """Apply the sensing matrix: ``(A z)[r] = <a_r, z>``."""
    return ensemble.forward(z)


def adjoint(ensemble, v) -> np.ndarray:
    """Apply ``A^*``: ``sum_r v[r] a_r``."""
    return ensemble.adjoint(v)


def observe(ensemble, x) -> np.ndarray:
    """Intensity measurements ``y = |A x|^2``."""
    x = as_vector(x, "x")
    w = ensemble.forward(x)
    return w.real**2 + w.imag**2
