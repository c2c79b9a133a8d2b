"""Synthetic ground-truth signals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import DimensionError, _generator

SIGNAL_KINDS = ("gaussian", "lowpass")


@dataclass(frozen=True)
class SignalModel:
    """``gaussian``: i.i.d. X + iY entries.  ``lowpass``: M random low frequencies.

    ``M`` defaults to ``n // 8`` when left as ``None``.
    """

    kind: str = "gaussian"
    M: int | None = None

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise ValueError(f"unknown signal model {self.kind!r}")


def lowpass_frequencies(n: int, M: int) -> np.ndarray:
    """DFT bins occupied by a low-pass signal: ``-floor(M/2) .. M - 1 - floor(M/2)`` (mod n)."""
    lo = -(M // 2)
    return np.arange(lo, lo + M) % n


def generate_signal(model: SignalModel, n: int, rng) -> np.ndarray:
    if n < 1:
        raise DimensionError("signal length must be positive")
    gen = _generator(rng)
    if model.kind == "gaussian":
        draws = gen.standard_normal((n, 2))
        return draws[:, 0] + 1j * draws[:, 1]
    M = model.M if model.M is not None else max(1, n // 8)
    if not 1 <= M <= n:
        raise DimensionError(f"low-pass bandwidth M={M} must lie in [1, {n}]")
    draws = gen.standard_normal((M, 2))
    coeffs = np.zeros(n, dtype=np.complex128)
    coeffs[lowpass_frequencies(n, M)] = draws[:, 0] + 1j * draws[:, 1]
    # x[t] = sum_j c_j exp(2 pi i j t / n)
    return np.fft.ifft(coeffs, norm="forward")
