"""Success-probability sweeps, image recovery, FFT timing and RC diagnostics."""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..core import DivergenceError, RandomSource, optimal_phase, relative_error
from ..initialization import SpectralConfig, spectral_init
from ..measurements import (
    PATTERNS,
    CountingEnsemble,
    observe,
    sample_cdp_ensemble,
    sample_gaussian_ensemble,
)
from ..objective import regularity_diagnostic
from ..solver import Schedule, SolverConfig, solve
from .images import ImageProblem
from .signals import SignalModel, generate_signal

THREADS_ENV = "WIRTFLOW_THREADS"


def worker_count() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ExperimentSpec:
    """One success-probability experiment.

    ``sweep`` holds m/n ratios for the Gaussian model and pattern counts L for
    the CDP model.
    """

    model: str = "gaussian"
    n: int = 128
    sweep: tuple = (6.0,)
    trials: int = 100
    seed: int = 0
    pattern: str = "octanary"
    signal: SignalModel = field(default_factory=SignalModel)
    solver: SolverConfig = field(
        default_factory=lambda: SolverConfig(2500, Schedule.heuristic(330.0, 0.2), trace_every=2500))
    init: SpectralConfig = field(default_factory=SpectralConfig)
    threshold: float = 1e-5

    def __post_init__(self):
        if self.model not in ("gaussian", "cdp"):
            raise ValueError(f"unknown measurement model {self.model!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if len(self.sweep) == 0:
            raise ValueError("sweep must contain at least one value")
        if self.model == "cdp":
            if any(float(L) != int(L) or int(L) < 1 for L in self.sweep):
                raise ValueError("CDP sweep values are pattern counts and must be positive integers")
            if self.pattern not in PATTERNS:
                raise ValueError(f"unknown pattern distribution {self.pattern!r}")

    def measurement_count(self, value) -> int:
        if self.model == "cdp":
            return int(value) * self.n
        return max(1, int(round(float(value) * self.n)))

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "pattern": self.pattern if self.model == "cdp" else None,
            "signal": self.signal.kind,
            "n": self.n,
            "sweep": [float(v) for v in self.sweep],
            "trials": self.trials,
            "seed": self.seed,
            "iterations": self.solver.max_iterations,
            "schedule": self.solver.schedule.as_dict(),
            "power_iterations": self.init.power_iterations,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class TrialOutcome:
    success: bool
    iterations: int
    rel_error: float
    diverged: bool


@dataclass
class SweepPoint:
    sweep_value: float
    successes: int
    trials: int
    mean_iters: float
    mean_rel_error: float

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials


@dataclass
class SuccessCurve:
    points: list
    spec: dict = field(default_factory=dict)


def trial_stream(point_index: int, trial_index: int) -> int:
    return (point_index << 32) | trial_index


def make_ensemble(model: str, n: int, value, pattern: str, rng):
    if model == "cdp":
        return sample_cdp_ensemble(n, int(value), PATTERNS[pattern], rng)
    return sample_gaussian_ensemble(n, max(1, int(round(float(value) * n))), rng)


def run_trial(spec: ExperimentSpec, point_index: int, trial_index: int) -> TrialOutcome:
    """One end-to-end pipeline on its own random stream."""
    gen = RandomSource(spec.seed, trial_stream(point_index, trial_index)).generator()
    value = spec.sweep[point_index]
    x = generate_signal(spec.signal, spec.n, gen)
    ensemble = make_ensemble(spec.model, spec.n, value, spec.pattern, gen)
    y = observe(ensemble, x)
    z0 = spectral_init(ensemble, y, spec.init, gen)
    try:
        result = solve(ensemble, y, z0, spec.solver)
    except DivergenceError as err:
        with np.errstate(over="ignore", invalid="ignore"):
            rel = relative_error(err.z_last, x) if err.z_last is not None else math.nan
        return TrialOutcome(False, err.iteration, rel if math.isfinite(rel) else math.nan, True)
    rel = relative_error(result.z_final, x)
    return TrialOutcome(rel < spec.threshold, result.iterations_run, rel, False)


def _run_indexed(args):
    return run_trial(*args)


def aggregate(spec: ExperimentSpec, outcomes: dict) -> SuccessCurve:
    """Reduce outcomes keyed by ``(point, trial)`` in index order."""
    points = []
    for p, value in enumerate(spec.sweep):
        trial_outcomes = [outcomes[(p, t)] for t in range(spec.trials)]
        rels = [o.rel_error for o in trial_outcomes if math.isfinite(o.rel_error)]
        points.append(SweepPoint(
            sweep_value=float(value),
            successes=sum(o.success for o in trial_outcomes),
            trials=spec.trials,
            mean_iters=sum(o.iterations for o in trial_outcomes) / spec.trials,
            mean_rel_error=math.fsum(rels) / len(rels) if rels else math.nan,
        ))
    return SuccessCurve(points, spec.as_dict())


def run_success_sweep(spec: ExperimentSpec, workers: int | None = None, order=None) -> SuccessCurve:
    """Run every trial of every sweep point and aggregate the success curve.

    ``order`` optionally permutes the execution order of the ``(point, trial)``
    jobs; the aggregate does not depend on it.
    """
    jobs = [(p, t) for p in range(len(spec.sweep)) for t in range(spec.trials)]
    if order is not None:
        jobs = [jobs[i] for i in order]
    workers = worker_count() if workers is None else workers
    args = [(spec, p, t) for p, t in jobs]
    if workers <= 1:
        results = [_run_indexed(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_indexed, args, chunksize=max(1, len(args) // (4 * workers))))
    return aggregate(spec, dict(zip(jobs, results)))


# -- images -------------------------------------------------------------------


def fft_unit_calibration(n: int, repetitions: int = 200, seed: int = 0) -> float:
    """Median wall time in seconds of one length-n complex FFT."""
    if n < 2:
        raise ValueError("FFT length must be >= 2")
    gen = RandomSource(seed).generator()
    data = gen.standard_normal(n) + 1j * gen.standard_normal(n)
    np.fft.fft(data)
    timings = []
    for _ in range(max(1, repetitions)):
        start = time.perf_counter()
        np.fft.fft(data)
        timings.append(time.perf_counter() - start)
    return float(np.median(timings))


def predicted_fft_units(L: int, power_iterations: int, solve_iterations: int) -> int:
    """One FFT and one inverse FFT per pattern for each power or gradient iteration."""
    return 2 * L * (power_iterations + solve_iterations)


@dataclass
class ImageRecovery:
    results: list
    recovered: ImageProblem
    rel_errors: list
    fft_count: int
    predicted_fft_units: int
    wall_seconds: float
    fft_unit_seconds: float | None = None

    @property
    def fft_units_measured(self) -> float | None:
        if not self.fft_unit_seconds:
            return None
        return self.wall_seconds / self.fft_unit_seconds

    def summary(self) -> dict:
        return {
            "width": self.recovered.width,
            "height": self.recovered.height,
            "channels": len(self.recovered.channels),
            "rel_errors": self.rel_errors,
            "fft_count": self.fft_count,
            "predicted_fft_units": self.predicted_fft_units,
            "wall_seconds": self.wall_seconds,
            "fft_unit_seconds": self.fft_unit_seconds,
            "fft_units_measured": self.fft_units_measured,
        }


def recover_channel(codes_ensemble, x, init: SpectralConfig, solver: SolverConfig, rng):
    """Recover one real channel; returns ``(result, aligned_real, fft_count)``."""
    x = np.asarray(x, dtype=np.complex128)
    y = observe(codes_ensemble, x)
    counted = CountingEnsemble(codes_ensemble)
    z0 = spectral_init(counted, y, init, rng)
    result = solve(counted, y, z0, solver, x=x)
    aligned = np.exp(-1j * optimal_phase(result.z_final, x)) * result.z_final
    return result, aligned.real, counted.fft_count


def run_image_recovery(problem: ImageProblem, L: int = 20, pattern: str = "octanary",
                       init: SpectralConfig = SpectralConfig(),
                       solver: SolverConfig = SolverConfig(300, Schedule.heuristic(330.0, 0.4)),
                       seed: int = 0, calibrate: bool = False) -> ImageRecovery:
    """Recover each channel from L coded diffraction patterns shared across channels.

    Codes are drawn from stream 0 of ``seed`` and channel ``c`` uses stream
    ``c + 1`` for its power-method start, so channels are independent of the
    order in which they are processed.
    """
    if L < 1:
        raise ValueError("need at least one pattern")
    ensemble = sample_cdp_ensemble(problem.n, L, PATTERNS[pattern], RandomSource(seed, 0))
    start = time.perf_counter()
    results, recovered, errors, ffts = [], [], [], 0
    for c, channel in enumerate(problem.channels):
        result, real, count = recover_channel(ensemble, channel, init, solver, RandomSource(seed, c + 1))
        results.append(result)
        recovered.append(real)
        errors.append(relative_error(result.z_final, channel))
        ffts += count
    wall = (time.perf_counter() - start) / len(problem.channels)
    unit = fft_unit_calibration(problem.n) if calibrate else None
    return ImageRecovery(
        results=results,
        recovered=ImageProblem(problem.width, problem.height, recovered),
        rel_errors=errors,
        fft_count=ffts // len(problem.channels),
        predicted_fft_units=predicted_fft_units(L, init.power_iterations, solver.max_iterations),
        wall_seconds=wall,
        fft_unit_seconds=unit,
    )


# -- regularity condition -----------------------------------------------------


def sample_basin_point(x, eps: float, gen) -> np.ndarray:
    """A random point of ``E(eps)``: a globally rotated ``x + h`` with ``||h|| <= eps``."""
    n = x.size
    h = gen.standard_normal(n) + 1j * gen.standard_normal(n)
    h *= eps * gen.uniform() / np.linalg.norm(h)
    return np.exp(2j * np.pi * gen.uniform()) * (x + h)


def regularity_pass_rate(n: int, m: int, alpha: float, beta: float, samples: int, seed: int = 0,
                         eps: float = 1 / 8) -> dict:
    """Fraction of random points of ``E(eps)`` where the regularity slack is >= 0."""
    gen = RandomSource(seed).generator()
    x = gen.standard_normal(n) + 1j * gen.standard_normal(n)
    x /= np.linalg.norm(x)
    ensemble = sample_gaussian_ensemble(n, m, gen)
    y = observe(ensemble, x)
    values = [regularity_diagnostic(ensemble, y, x, sample_basin_point(x, eps, gen), alpha, beta)
              for _ in range(samples)]
    passed = sum(v >= 0 for v in values)
    return {
        "n": n, "m": m, "alpha": alpha, "beta": beta, "eps": eps, "samples": samples, "seed": seed,
        "passed": passed, "pass_rate": passed / samples, "min_slack": min(values),
    }
