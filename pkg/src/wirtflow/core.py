"""Complex vectors, seeded random streams and the phase-invariant distance.

Vectors are plain one-dimensional ``complex128`` numpy arrays.  The inner
product used throughout the package is ``<z, x> = sum(conj(z) * x)``, i.e.
``np.vdot(z, x)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class WirtflowError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(WirtflowError, ValueError):
    """Raised on invalid or mismatched vector/ensemble dimensions."""


class PreconditionError(WirtflowError, ValueError):
    """Raised when an input violates a documented precondition."""


class DegenerateError(WirtflowError, ArithmeticError):
    """Raised when a computation hits a degenerate point (zero norm, Yv = 0)."""


class DivergenceError(WirtflowError, ArithmeticError):
    """Raised when an iteration produces non-finite values.

    Attributes
    ----------
    trace : list
        Trace records collected before the failure.
    z_last : ndarray or None
        Last finite iterate.
    iteration : int
        Iteration at which the non-finite value appeared.
    """

    def __init__(self, message, trace=None, z_last=None, iteration=0):
        super().__init__(message)
        self.trace = trace if trace is not None else []
        self.z_last = z_last
        self.iteration = iteration


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Return ``values`` as a finite 1-D complex128 array of length >= 1."""
    arr = np.asarray(values, dtype=np.complex128)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} must have length >= 1")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError(f"{name} contains non-finite entries")
    return arr


def frozen(arr: np.ndarray) -> np.ndarray:
    """Mark an array read-only and return it."""
    arr.setflags(write=False)
    return arr


def _check_same_length(z: np.ndarray, x: np.ndarray) -> None:
    if z.shape != x.shape:
        raise DimensionError(f"length mismatch: {z.shape[0]} vs {x.shape[0]}")


@dataclass(frozen=True)
class RandomSource:
    """A reproducible random stream identified by ``(seed, stream)``.

    Streams with distinct ids are statistically independent, and the draws
    for a given pair do not depend on what other streams have been used, so
    trial ``k`` can run on stream ``k`` in any order or process.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        for label, value in (("seed", self.seed), ("stream", self.stream)):
            if not 0 <= int(value) < 2**64:
                raise ValueError(f"{label} must be a 64-bit unsigned integer, got {value}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(seq))

    def substream(self, stream: int) -> "RandomSource":
        return RandomSource(self.seed, stream)


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, RandomSource):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RandomSource or numpy Generator, got {type(rng).__name__}")


def sample_complex_gaussian(n: int, rng, size: int | None = None) -> np.ndarray:
    """Draw entries with independent N(0, 1/2) real and imaginary parts.

    ``E|entry|^2 = 1``.  With ``size`` set, returns a ``(size, n)`` array of
    independent rows.
    """
    if n < 1 or (size is not None and size < 1):
        raise DimensionError(f"dimensions must be positive, got n={n}, size={size}")
    gen = _generator(rng)
    shape = (n,) if size is None else (size, n)
    draws = gen.standard_normal(shape + (2,)) * np.sqrt(0.5)
    return draws[..., 0] + 1j * draws[..., 1]


def optimal_phase(z, x) -> float:
    """Angle in ``[0, 2*pi)`` minimising ``||z - exp(i*phi) x||``.

    Returns 0 when ``<x, z>`` vanishes (every angle is optimal).
    """
    z = as_vector(z, "z")
    x = as_vector(x, "x")
    _check_same_length(z, x)
    inner = np.vdot(x, z)
    if inner == 0:
        return 0.0
    return float(np.mod(np.angle(inner), 2 * np.pi))


def dist(z, x) -> float:
    """Distance between ``z`` and ``x`` up to a global phase.

    Equal to ``sqrt(||z||^2 + ||x||^2 - 2|<z, x>|)``, but evaluated as the norm
    of the phase-aligned difference so that errors far below 1e-8 are not lost
    to cancellation.
    """
    z = as_vector(z, "z")
    x = as_vector(x, "x")
    _check_same_length(z, x)
    inner = np.vdot(x, z)
    if inner == 0:
        return float(np.sqrt(np.vdot(z, z).real + np.vdot(x, x).real))
    return float(np.linalg.norm(z - (inner / abs(inner)) * x))


def relative_error(zhat, x) -> float:
    """``dist(zhat, x) / ||x||``."""
    x = as_vector(x, "x")
    norm_x = np.linalg.norm(x)
    if norm_x == 0:
        raise ZeroDivisionError("relative error undefined for a zero reference vector")
    return dist(zhat, x) / float(norm_x)
