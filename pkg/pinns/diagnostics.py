"""
Evaluation metrics and loss-Laplacian (Hessian trace) estimates.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .autodiff import Objective, hvp
from .exceptions import ConfigurationError, ParameterError, UndefinedMetricError
from .networks import ParamVector, check_params, forward
from .solvers import DEFAULT_ATOL, DEFAULT_RTOL, reference_solution
from .systems import OdeSystem
from .training import Component, PinnObjective, TrainingConfig

logger = logging.getLogger(__name__)

DEFAULT_PROBES = 64


@dataclass(frozen=True)
class TraceEstimate:
    mean: float
    stderr: float
    n_probes: int
    component: str

    def scaled(self, divisor: float) -> 'TraceEstimate':
        return TraceEstimate(self.mean / divisor, self.stderr / divisor, self.n_probes, self.component)


@dataclass(frozen=True)
class ErrorReport:
    rel_error_eval: float
    rel_error_ic: float
    rel_error_train: float = None


def rel_error(u_ref, u_hat) -> float:
    u_ref = np.asarray(u_ref, dtype=np.float64)
    u_hat = np.asarray(u_hat, dtype=np.float64)
    if u_ref.shape != u_hat.shape:
        raise ConfigurationError(f'shape mismatch: reference {u_ref.shape}, prediction {u_hat.shape}')
    denominator = float(np.sum(u_ref * u_ref))
    if denominator == 0.0:
        raise UndefinedMetricError('relative error undefined for a zero reference')
    diff = u_ref - u_hat
    return math.sqrt(float(np.sum(diff * diff)) / denominator)


def rel_error_ic(u0, u_hat0) -> float:
    u0 = np.asarray(u0, dtype=np.float64)
    norm = float(np.linalg.norm(u0))
    if norm == 0.0:
        raise UndefinedMetricError('initial-condition error undefined for u0 = 0')
    return float(np.linalg.norm(u0 - np.asarray(u_hat0, dtype=np.float64))) / norm


def evaluate_errors(config: TrainingConfig, params, rtol: float = DEFAULT_RTOL,
                    atol: float = DEFAULT_ATOL, method: str = 'auto') -> ErrorReport:
    """RelError on the held-out midpoints, on the training points, and at t = 0."""
    collocation = config.collocation
    points = np.sort(np.concatenate([collocation.train_points, collocation.eval_points]))
    reference = reference_solution(config.system, points, rtol=rtol, atol=atol, method=method)
    predicted = forward(config.network, params, points)
    on_eval = np.isin(points, collocation.eval_points)
    return ErrorReport(
        rel_error_eval=rel_error(reference.states[on_eval], predicted[on_eval]),
        rel_error_ic=rel_error_ic(config.system.u0, forward(config.network, params, 0.0)),
        rel_error_train=rel_error(reference.states[~on_eval], predicted[~on_eval]),
    )


def rademacher_probe(seed: int, index: int, size: int) -> np.ndarray:
    """Probe `index` of stream `seed`; independent of evaluation order."""
    generator = np.random.Generator(np.random.Philox(key=(int(seed) << 64) + int(index)))
    return generator.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0


def hutchinson_trace(loss: Objective, params, n_probes: int, seed: int,
                     component: str = Component.TOTAL, workers: int = 1) -> TraceEstimate:
    """tr(H) ~ mean of v^T H v over Rademacher probes v."""
    if n_probes < 1:
        raise ParameterError(f'n_probes must be >= 1, got {n_probes}')
    w = params.values if isinstance(params, ParamVector) else np.asarray(params, dtype=np.float64)

    def sample(index):
        v = rademacher_probe(seed, index, w.shape[0])
        return float(v @ hvp(loss, w, v))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            samples = list(executor.map(sample, range(n_probes)))
    else:
        samples = [sample(i) for i in range(n_probes)]

    mean = math.fsum(samples) / n_probes
    if n_probes > 1:
        variance = math.fsum((s - mean) ** 2 for s in samples) / (n_probes - 1)
        stderr = math.sqrt(variance / n_probes)
    else:
        stderr = 0.0
    return TraceEstimate(mean, stderr, n_probes, component)


def laplacian_estimates(system: OdeSystem, config: TrainingConfig, params, n_probes: int = DEFAULT_PROBES,
                        seed: int = 0, workers: int = 1) -> dict:
    """
    Normalised Laplacians of the uniform loss components: the residual trace is
    divided by system.residual_trace_divisor() (kappa_N for heat) and the
    initial-condition trace by system.ic_trace_divisor() (N for heat).
    """
    values = check_params(config.network, params)
    if system is not config.system:
        config = replace(config, system=system)
    divisors = {
        Component.RESIDUAL: system.residual_trace_divisor(),
        Component.INITIAL_CONDITION: system.ic_trace_divisor(),
    }
    estimates = {}
    for component, divisor in divisors.items():
        objective = PinnObjective.uniform(config, component=component)
        raw = hutchinson_trace(objective, values, n_probes, seed, component=component, workers=workers)
        estimates[component] = raw.scaled(divisor)
        logger.debug('%s trace %.6g +/- %.2g (divisor %.6g)', component, raw.mean, raw.stderr, divisor)
    return estimates


def normalized_laplacians(system: OdeSystem, config: TrainingConfig, params, n_probes: int = DEFAULT_PROBES,
                          seed: int = 0):
    """(residual_norm_trace, ic_norm_trace)."""
    estimates = laplacian_estimates(system, config, params, n_probes, seed)
    return estimates[Component.RESIDUAL].mean, estimates[Component.INITIAL_CONDITION].mean
