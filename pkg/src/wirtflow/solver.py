"""Wirtinger Flow gradient iterations."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import DivergenceError, PreconditionError, as_vector, relative_error
from .objective import as_observations, loss_and_gradient


@dataclass(frozen=True)
class Schedule:
    """Step-size sequence: ``constant`` (``mu``) or ``heuristic`` (``tau0``, ``mu_max``)."""

    kind: str = "heuristic"
    mu: float = 0.1
    tau0: float = 330.0
    mu_max: float = 0.4

    def __post_init__(self):
        if self.kind == "constant":
            if not self.mu > 0:
                raise PreconditionError("constant step size must be positive")
        elif self.kind == "heuristic":
            if not self.tau0 > 0:
                raise PreconditionError("tau0 must be positive")
            if not 0 < self.mu_max <= 1:
                raise PreconditionError("mu_max must lie in (0, 1]")
        else:
            raise PreconditionError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def constant(cls, mu: float) -> "Schedule":
        return cls("constant", mu=mu)

    @classmethod
    def heuristic(cls, tau0: float = 330.0, mu_max: float = 0.4) -> "Schedule":
        return cls("heuristic", tau0=tau0, mu_max=mu_max)

    def as_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "mu": self.mu}
        return {"kind": "heuristic", "tau0": self.tau0, "mu_max": self.mu_max}


def schedule_mu(schedule: Schedule, tau: int) -> float:
    """Step size for iteration ``tau >= 1``."""
    if tau < 1:
        raise PreconditionError("iteration index starts at 1")
    if schedule.kind == "constant":
        return schedule.mu
    return min(-math.expm1(-tau / schedule.tau0), schedule.mu_max)


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 2500
    schedule: Schedule = field(default_factory=Schedule)
    # stop once ||grad|| <= gradient_tolerance * ||z0||^3; 0 disables
    gradient_tolerance: float = 0.0
    trace_every: int = 1

    def __post_init__(self):
        if self.max_iterations < 1:
            raise PreconditionError("max_iterations must be >= 1")
        if self.gradient_tolerance < 0:
            raise PreconditionError("gradient_tolerance must be non-negative")
        if self.trace_every < 1:
            raise PreconditionError("trace_every must be >= 1")


@dataclass(frozen=True)
class TraceRecord:
    """State of iterate ``z_iteration`` and the step size used to leave it."""

    iteration: int
    loss: float
    mu: float
    grad_norm: float
    rel_error: float | None = None


@dataclass
class SolveResult:
    z_final: np.ndarray
    iterations_run: int
    trace: list
    converged: bool
    norm_z0_squared: float
    schedule: dict = field(default_factory=dict)


TRACE_COLUMNS = ("iteration", "loss", "mu", "grad_norm", "rel_error")


def trace_to_csv(trace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for rec in trace:
        rel = "" if rec.rel_error is None else repr(rec.rel_error)
        writer.writerow([rec.iteration, repr(rec.loss), repr(rec.mu), repr(rec.grad_norm), rel])
    return buf.getvalue()


def write_trace_csv(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(trace_to_csv(trace))


def step(z, gradient, mu: float, norm_z0_squared: float) -> np.ndarray:
    """``z - mu / ||z0||^2 * gradient``."""
    if not norm_z0_squared > 0:
        raise PreconditionError("||z0||^2 must be positive")
    return np.asarray(z, dtype=np.complex128) - (mu / norm_z0_squared) * np.asarray(gradient, dtype=np.complex128)


def solve(ensemble, y, z0, config: SolverConfig = SolverConfig(), x=None) -> SolveResult:
    """Run Wirtinger Flow from ``z0``.

    Iteration ``tau`` evaluates the loss and gradient at ``z_{tau-1}`` and moves
    to ``z_tau``.  The divisor ``||z0||^2`` is fixed at the start.  When the
    ground truth ``x`` is supplied the trace also records relative errors.

    Raises
    ------
    DivergenceError
        If the loss or gradient becomes non-finite.  The exception carries the
        partial trace and the last finite iterate.
    """
    y = as_observations(y, ensemble.m)
    z = as_vector(z0, "z0").copy()
    norm0 = float(np.vdot(z, z).real)
    if not norm0 > 0:
        raise PreconditionError("initial guess must be non-zero")
    threshold = config.gradient_tolerance * norm0**1.5
    trace = []
    converged = False
    tau = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for tau in range(1, config.max_iterations + 1):
            value, grad = loss_and_gradient(ensemble, y, z)
            grad_norm = float(np.linalg.norm(grad))
            if not (math.isfinite(value) and math.isfinite(grad_norm)):
                raise DivergenceError(f"non-finite loss or gradient at iteration {tau}",
                                      trace=trace, z_last=z, iteration=tau)
            mu = schedule_mu(config.schedule, tau)
            if (tau - 1) % config.trace_every == 0:
                rel = relative_error(z, x) if x is not None else None
                trace.append(TraceRecord(tau - 1, value, mu, grad_norm, rel))
            if grad_norm <= threshold:
                converged = True
                break
            z_next = step(z, grad, mu, norm0)
            if not np.all(np.isfinite(z_next)):
                raise DivergenceError(f"non-finite iterate at iteration {tau}",
                                      trace=trace, z_last=z, iteration=tau)
            z = z_next
    return SolveResult(z, tau, trace, converged, norm0, config.schedule.as_dict())


def success(result: SolveResult, x, threshold: float = 1e-5) -> bool:
    return relative_error(result.z_final, x) < threshold
