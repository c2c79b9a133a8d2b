"""Quadratic intensity loss, its Wirtinger gradient and closed-form oracles.

The loss is ``f(z) = 1/(2m) * sum_r (y_r - |a_r^* z|^2)^2`` and the gradient is
taken in conjugate coordinates, ``grad f = (df/dz)^*``, so that for real
coordinates ``df/dRe(z_k) = 2 Re(grad_k)`` and ``df/dIm(z_k) = 2 Im(grad_k)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionError, PreconditionError, _generator, as_vector, dist, optimal_phase, sample_complex_gaussian


def as_observations(y, m: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (m,):
        raise DimensionError(f"observations must have length {m}, got shape {y.shape}")
    if not np.all(np.isfinite(y)) or np.any(y < 0):
        raise PreconditionError("observations must be finite and non-negative")
    return y


def _prepare(ensemble, y, z):
    z = as_vector(z, "z")
    if z.size != ensemble.n:
        raise DimensionError(f"z has length {z.size}, ensemble expects {ensemble.n}")
    return as_observations(y, ensemble.m), z


def loss(ensemble, y, z) -> float:
    y, z = _prepare(ensemble, y, z)
    w = ensemble.forward(z)
    resid = w.real**2 + w.imag**2 - y
    return float(np.dot(resid, resid) / (2 * ensemble.m))


def loss_and_gradient(ensemble, y, z) -> tuple[float, np.ndarray]:
    """Loss and gradient at ``z`` sharing one forward and one adjoint application."""
    y, z = _prepare(ensemble, y, z)
    w = ensemble.forward(z)
    resid = w.real**2 + w.imag**2 - y
    value = float(np.dot(resid, resid) / (2 * ensemble.m))
    grad = ensemble.adjoint(resid * w) / ensemble.m
    return value, grad


def wirtinger_gradient(ensemble, y, z) -> np.ndarray:
    """``1/m * sum_r (|a_r^* z|^2 - y_r) a_r a_r^* z``, computed matrix-free."""
    return loss_and_gradient(ensemble, y, z)[1]


def _unit_signal(x) -> np.ndarray:
    x = as_vector(x, "x")
    if abs(np.linalg.norm(x) - 1.0) > 1e-9:
        raise PreconditionError(f"expectation formulas assume ||x|| = 1, got {np.linalg.norm(x)!r}")
    return x


def expected_gradient(x, z) -> np.ndarray:
    """Mean gradient over Gaussian sampling vectors for a fixed ``z``.

    ``(I - x x^*) z + 2 (||z||^2 - 1) z`` with ``||x|| = 1``.
    """
    x = _unit_signal(x)
    z = as_vector(z, "z")
    if z.shape != x.shape:
        raise DimensionError("x and z differ in length")
    return z - x * np.vdot(x, z) + 2 * (np.vdot(z, z).real - 1) * z


def expected_hessian(x) -> np.ndarray:
    """Mean Hessian at the solution, a ``2n x 2n`` matrix in ``[z; conj(z)]`` coordinates."""
    x = _unit_signal(x)
    n = x.size
    u = np.concatenate([x, x.conj()])
    w = np.concatenate([x, -x.conj()])
    return np.eye(2 * n) + 1.5 * np.outer(u, u.conj()) - 0.5 * np.outer(w, w.conj())


def hessian_blocks(ensemble, y, z) -> np.ndarray:
    """Dense ``2n x 2n`` Hessian.  Test oracle only; needs ``ensemble.matrix()``."""
    y, z = _prepare(ensemble, y, z)
    A = ensemble.matrix()  # rows a_r^*
    a = A.conj()  # rows a_r
    w = A @ z
    diag = 2 * np.abs(w) ** 2 - y
    m = ensemble.m
    hzz = (a.T * diag) @ A / m
    hzbar = (a.T * w**2) @ a / m
    return np.block([[hzz, hzbar], [hzbar.conj(), hzz.conj()]])


def hessian_quadratic_form(ensemble, y, z, h) -> float:
    """``[h; conj(h)]^* H(z) [h; conj(h)]`` without forming the Hessian.

    Reduces to ``1/m * sum_r 2(2|a_r^* z|^2 - y_r)|a_r^* h|^2
    + 2 Re((a_r^* z)^2 conj(a_r^* h)^2)``.
    """
    y, z = _prepare(ensemble, y, z)
    h = as_vector(h, "h")
    if h.shape != z.shape:
        raise DimensionError("h and z differ in length")
    w = ensemble.forward(z)
    v = ensemble.forward(h)
    terms = 2 * (2 * np.abs(w) ** 2 - y) * np.abs(v) ** 2 + 2 * np.real(w**2 * v.conj() ** 2)
    return float(np.sum(terms) / ensemble.m)


@dataclass(frozen=True)
class MomentEstimates:
    """Monte Carlo means with standard errors, keyed by quantity name."""

    means: dict
    std_errors: dict
    samples: int


def gaussian_moment_oracle(u, v, samples: int, rng) -> MomentEstimates:
    """Monte Carlo estimates of Gaussian moment identities for unit ``u``, ``v``.

    Keys: ``"re_uaav_sq"`` for ``E[Re(u^* a a^* v)^2]``, ``"re_uaav_abs_av_sq"``
    for ``E[Re(u^* a a^* v) |a^* v|^2]`` and ``"abs_av_2k"`` with k = 1..4 for
    ``E|a^* v|^(2k)``.
    """
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    for label, vec in (("u", u), ("v", v)):
        if abs(np.linalg.norm(vec) - 1) > 1e-9:
            raise PreconditionError(f"{label} must have unit norm")
    if u.shape != v.shape:
        raise DimensionError("u and v differ in length")
    gen = _generator(rng)
    a = sample_complex_gaussian(u.size, gen, size=samples)
    # u^* a a^* v = conj(a^* u) (a^* v)
    au = a.conj() @ u
    av = a.conj() @ v
    cross = np.real(au.conj() * av)
    mag = np.abs(av) ** 2
    draws = {"re_uaav_sq": cross**2, "re_uaav_abs_av_sq": cross * mag}
    for k in range(1, 5):
        draws[f"abs_av_{2 * k}"] = mag**k
    means = {key: float(np.mean(val)) for key, val in draws.items()}
    errs = {key: float(np.std(val, ddof=1) / np.sqrt(samples)) for key, val in draws.items()}
    return MomentEstimates(means, errs, samples)


def regularity_diagnostic(ensemble, y, x, z, alpha: float, beta: float) -> float:
    """Slack in the regularity condition at ``z``; non-negative means it holds.

    ``Re<grad f(z), z - x e^{i phi(z)}> - dist(z, x)^2 / alpha - ||grad f(z)||^2 / beta``
    """
    if alpha <= 0 or beta <= 0:
        raise PreconditionError("alpha and beta must be positive")
    x = as_vector(x, "x")
    grad = wirtinger_gradient(ensemble, y, z)
    z = np.asarray(z, dtype=np.complex128)
    if x.shape != z.shape:
        raise DimensionError("x and z differ in length")
    h = z - np.exp(1j * optimal_phase(z, x)) * x
    return float(np.vdot(grad, h).real - dist(z, x) ** 2 / alpha - np.vdot(grad, grad).real / beta)
