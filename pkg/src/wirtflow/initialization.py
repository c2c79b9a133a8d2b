"""Spectral initialization via the power method, and its resampled variant."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    DegenerateError,
    DimensionError,
    DivergenceError,
    PreconditionError,
    _generator,
    sample_complex_gaussian,
)
from .measurements import CdpEnsemble, GaussianEnsemble
from .objective import as_observations, wirtinger_gradient

NORMALIZATIONS = ("algorithm1_lambda", "mean_intensity")


class DegenerateObservationsWarning(UserWarning):
    """All observations are zero; the initializer returns the zero vector."""


@dataclass(frozen=True)
class SpectralConfig:
    power_iterations: int = 50
    normalization: str = "algorithm1_lambda"

    def __post_init__(self):
        if self.power_iterations < 1:
            raise PreconditionError("power_iterations must be >= 1")
        if self.normalization not in NORMALIZATIONS:
            raise PreconditionError(f"normalization must be one of {NORMALIZATIONS}")


@dataclass(frozen=True)
class ResampleConfig:
    blocks_B: int
    mu_tilde: float = 0.1

    def __post_init__(self):
        if self.blocks_B < 1:
            raise PreconditionError("blocks_B must be >= 1")
        if self.mu_tilde < 0:
            raise PreconditionError("mu_tilde must be non-negative")

    @classmethod
    def default_for(cls, n: int, mu_tilde: float = 0.1) -> "ResampleConfig":
        """``B = ceil(2 ln n)``; at least one block."""
        return cls(max(1, math.ceil(2 * math.log(n))), mu_tilde)


def power_method(apply_Y: Callable[[np.ndarray], np.ndarray], n: int, iters: int, rng,
                 callback: Callable[[int, np.ndarray], None] | None = None) -> np.ndarray:
    """Leading eigenvector of a PSD operator by normalised repeated application.

    Starts from a uniformly random unit vector.  ``callback(tau, v_tau)`` is
    invoked after each iteration when given.
    """
    if iters < 1:
        raise PreconditionError("iters must be >= 1")
    v = sample_complex_gaussian(n, _generator(rng))
    v /= np.linalg.norm(v)
    for tau in range(1, iters + 1):
        w = apply_Y(v)
        norm = np.linalg.norm(w)
        if norm == 0 or not np.isfinite(norm):
            raise DegenerateError(f"power method hit Yv with norm {norm} at iteration {tau}")
        v = w / norm
        if callback is not None:
            callback(tau, v)
    return v


def spectral_operator(ensemble, y) -> Callable[[np.ndarray], np.ndarray]:
    """``v -> 1/m * A^* diag(y) A v``."""
    y = as_observations(y, ensemble.m)
    m = ensemble.m
    return lambda v: ensemble.adjoint(y * ensemble.forward(v)) / m


def spectral_norm_squared(ensemble, y, normalization: str = "algorithm1_lambda") -> float:
    y = as_observations(y, ensemble.m)
    if normalization == "algorithm1_lambda":
        return ensemble.n * float(np.sum(y)) / ensemble.total_row_norm_sq()
    if normalization == "mean_intensity":
        return float(np.mean(y))
    raise PreconditionError(f"unknown normalization {normalization!r}")


def spectral_init(ensemble, y, config: SpectralConfig = SpectralConfig(), rng=None) -> np.ndarray:
    """Top eigenvector of ``1/m sum_r y_r a_r a_r^*`` scaled to the estimated signal norm."""
    y = as_observations(y, ensemble.m)
    if not np.any(y):
        warnings.warn("all observations are zero; returning the zero vector", DegenerateObservationsWarning,
                      stacklevel=2)
        return np.zeros(ensemble.n, dtype=np.complex128)
    if rng is None:
        raise PreconditionError("spectral_init needs a random source for the power-method start")
    v = power_method(spectral_operator(ensemble, y), ensemble.n, config.power_iterations, rng)
    return math.sqrt(spectral_norm_squared(ensemble, y, config.normalization)) * v


def partition(ensemble, y, groups: int) -> tuple[list, list]:
    """Split an ensemble and its observations into ``groups`` independent blocks.

    CDP ensembles are split by whole patterns, Gaussian ensembles by rows.  Each
    block gets ``floor(count / groups)`` units; the remainder goes to block 0.
    """
    y = as_observations(y, ensemble.m)
    if isinstance(ensemble, CdpEnsemble):
        count, unit = ensemble.L, ensemble.n
    elif isinstance(ensemble, GaussianEnsemble):
        count, unit = ensemble.m, 1
    else:
        raise TypeError(f"cannot partition {type(ensemble).__name__}")
    size = count // groups
    if groups < 2 or size < 1:
        raise DimensionError(f"cannot split {count} units into {groups} non-empty groups")
    bounds = [0, size + count - groups * size]
    bounds += [bounds[-1] + size * (k + 1) for k in range(groups - 1)]
    blocks, observations = [], []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        blocks.append(ensemble.take(slice(lo, hi)))
        observations.append(y[lo * unit:hi * unit])
    return blocks, observations


def resampled_init(block_ensembles, block_observations, config: ResampleConfig,
                   power_iterations: int = 50, rng=None) -> np.ndarray:
    """Spectral start on block 0 refined by ``B`` gradient steps.

    Step ``b`` (``b = 0 .. B-1``) descends the loss of block ``b``, so block 0
    serves both the spectral start and the first step and block ``B`` is never
    read.  Every step is scaled by ``mu_tilde / ||u_0||^2`` with ``u_0`` the
    spectral start.
    """
    if len(block_ensembles) < 2:
        raise DimensionError("resampled initialization needs at least two blocks")
    if len(block_ensembles) != len(block_observations):
        raise DimensionError("one observation vector is required per block")
    if len(block_ensembles) < config.blocks_B + 1:
        raise DimensionError(f"B = {config.blocks_B} needs {config.blocks_B + 1} blocks, "
                             f"got {len(block_ensembles)}")
    n = block_ensembles[0].n
    if any(ens.n != n for ens in block_ensembles):
        raise DimensionError("blocks disagree on the signal length")

    u0 = spectral_init(block_ensembles[0], block_observations[0], SpectralConfig(power_iterations), rng)
    scale = float(np.vdot(u0, u0).real)
    if scale == 0:
        return u0
    u = u0
    for b in range(config.blocks_B):
        with np.errstate(over="ignore", invalid="ignore"):
            u = u - (config.mu_tilde / scale) * wirtinger_gradient(block_ensembles[b], block_observations[b], u)
        if not np.all(np.isfinite(u)):
            raise DivergenceError(f"resampled step {b} produced non-finite values", iteration=b + 1)
    return u
