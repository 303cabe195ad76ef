"""
Reference solutions: an adaptive Dormand-Prince 5(4) integrator with dense
output, plus the closed forms available for both benchmarks.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ParameterError, StiffnessError
from .systems import Benchmark, HarmonicOscillator, HeatSystem, OdeSystem, heat_eigenvalues, heat_eigenvectors

logger = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10
# heat grids at or above this size use the spectral oracle by default
SPECTRAL_THRESHOLD = 128

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERROR_EXPONENT = -1.0 / 5.0
MIN_STEP_FRACTION = 1e-14

# Dormand-Prince tableau
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# 5th-order solution minus embedded 4th-order solution, over all 7 stages
DP_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension: y(t + s h) = y + h * K^T P [s, s^2, s^3, s^4]
DP_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    method: str = 'rk45'
    rtol: float = None
    atol: float = None
    steps: int = 0
    rejected: int = 0
    evaluations: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.states.shape[0] != self.times.shape[0]:
            raise ParameterError('trajectory states and times disagree in length')

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='', encoding='utf-8') as fh:
            writer = csv.writer(fh)
            writer.writerow(['t'] + [f'u_{i}' for i in range(1, self.states.shape[1] + 1)])
            for t, row in zip(self.times, self.states):
                writer.writerow([repr(float(t))] + [repr(float(x)) for x in row])
        return path


def _rms(x) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def _initial_step(fun, t0, y0, f0, direction_span, rtol, atol) -> float:
    scale = atol + np.abs(y0) * rtol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    f1 = fun(t0 + h0, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    return min(100 * h0, h1, direction_span)


def _stages(fun, t, y, f, h):
    K = np.empty((7, y.shape[0]))
    K[0] = f
    for s in range(1, 6):
        dy = K[:s].T @ DP_A[s] * h
        K[s] = fun(t + DP_C[s] * h, y + dy)
    y_new = y + h * (K[:6].T @ DP_B)
    f_new = fun(t + h, y_new)
    K[6] = f_new
    return y_new, f_new, K


def rk45_integrate(system: OdeSystem, eval_points, rtol: float = DEFAULT_RTOL,
                   atol: float = DEFAULT_ATOL) -> Trajectory:
    """
    Integrate system.rhs from 0 and report states at eval_points through the
    Dormand-Prince continuous extension.
    """
    points = np.asarray(eval_points, dtype=np.float64).ravel()
    if rtol <= 0 or atol <= 0:
        raise ParameterError(f'tolerances must be positive (rtol={rtol}, atol={atol})')
    if points.size == 0:
        raise ParameterError('no evaluation points given')
    if np.any(np.diff(points) <= 0):
        raise ParameterError('evaluation points must be strictly increasing')
    if points[0] < 0 or points[-1] > system.horizon * (1 + 1e-12):
        raise ParameterError(f'evaluation points must lie in [0, {system.horizon}]')

    fun = system.rhs
    t_end = float(points[-1])
    t = 0.0
    y = system.u0.astype(np.float64).copy()
    states = np.empty((points.size, y.shape[0]))
    filled = 0
    while filled < points.size and points[filled] == 0.0:
        states[filled] = y
        filled += 1

    evaluations = 0
    steps = rejected = 0
    if filled < points.size:
        f = fun(t, y)
        h = _initial_step(fun, t, y, f, t_end, rtol, atol)
        evaluations += 2
        min_step = MIN_STEP_FRACTION * system.horizon
        step_rejected = False

        while filled < points.size:
            h = min(h, t_end - t)
            if not h >= min_step:
                raise StiffnessError(
                    f'step size {h:.3e} fell below {min_step:.3e} at t={t:.6g}', time=t
                )
            y_new, f_new, K = _stages(fun, t, y, f, h)
            evaluations += 6
            scale = atol + np.maximum(np.abs(y), np.abs(y_new)) * rtol
            error_norm = _rms(h * (K.T @ DP_E) / scale)

            if not error_norm <= 1.0:
                h *= max(MIN_FACTOR, SAFETY * error_norm ** ERROR_EXPONENT)
                rejected += 1
                step_rejected = True
                continue

            t_new = t + h if t_end - (t + h) > min_step else t_end
            Q = K.T @ DP_P
            while filled < points.size and points[filled] <= t_new:
                if points[filled] == t_new:
                    states[filled] = y_new
                else:
                    sigma = (points[filled] - t) / h
                    powers = np.cumprod(np.full(4, sigma))
                    states[filled] = y + h * (Q @ powers)
                filled += 1

            if error_norm == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, SAFETY * error_norm ** ERROR_EXPONENT)
            if step_rejected:
                factor = min(1.0, factor)
            t, y, f = t_new, y_new, f_new
            h *= factor
            steps += 1
            step_rejected = False

    logger.debug('rk45: %d steps, %d rejected, %d evaluations to t=%g',
                 steps, rejected, evaluations, t_end)
    return Trajectory(points, states, method='rk45', rtol=rtol, atol=atol,
                      steps=steps, rejected=rejected, evaluations=evaluations)


def shm_closed_form(omega: float, t) -> np.ndarray:
    """[-(pi/2) sin(wt), (pi/2) cos(wt)] for u0 = [0, pi/2]; shape (..., 2)."""
    t = np.asarray(t, dtype=np.float64)
    amplitude = math.pi / 2
    return np.stack([-amplitude * np.sin(omega * t), amplitude * np.cos(omega * t)], axis=-1)


def heat_spectral_solution(system: HeatSystem, t) -> np.ndarray:
    """
    u(t) = u_s + sum_n c_n exp(e_n t) v_n with the Toeplitz eigenpairs.
    Scalar t gives shape (N,), an array of times gives (len(t), N).
    """
    vectors = heat_eigenvectors(system.n_points)
    rates = heat_eigenvalues(system.n_points)
    steady = system.steady_state()
    coefficients = vectors.T @ (system.u0 - steady)
    t_arr = np.asarray(t, dtype=np.float64)
    decay = np.exp(np.multiply.outer(t_arr, rates)) * coefficients
    return steady + decay @ vectors.T


def reference_solution(system: OdeSystem, points, rtol: float = DEFAULT_RTOL,
                       atol: float = DEFAULT_ATOL, method: str = 'auto') -> Trajectory:
    """
    Ground truth at `points`. 'auto' integrates with RK45 except for heat grids
    of SPECTRAL_THRESHOLD nodes or more, which use the spectral solution.
    """
    points = np.asarray(points, dtype=np.float64).ravel()
    if method == 'auto':
        if isinstance(system, HeatSystem) and system.n_points >= SPECTRAL_THRESHOLD:
            method = 'spectral'
        else:
            method = 'rk45'

    if method == 'rk45':
        return rk45_integrate(system, points, rtol=rtol, atol=atol)
    if method == 'spectral':
        if not isinstance(system, HeatSystem):
            raise ParameterError('spectral reference is only available for the heat benchmark')
        return Trajectory(points, heat_spectral_solution(system, points), method='spectral')
    if method == 'closed_form':
        if not isinstance(system, HarmonicOscillator):
            raise ParameterError('closed-form reference is only available for SHM')
        return Trajectory(points, shm_closed_form(system.omega, points), method='closed_form')
    raise ParameterError(f'unknown reference method {method!r}')


def exact_solution(system: OdeSystem, t):
    """(u, du/dt) from the closed forms, differentiated analytically."""
    t_arr = np.asarray(t, dtype=np.float64)
    if system.benchmark == Benchmark.SHM:
        w = system.omega
        amplitude = math.pi / 2
        u = shm_closed_form(w, t_arr)
        u_t = np.stack([-amplitude * w * np.cos(w * t_arr), -amplitude * w * np.sin(w * t_arr)], axis=-1)
        return u, u_t
    vectors = heat_eigenvectors(system.n_points)
    rates = heat_eigenvalues(system.n_points)
    coefficients = vectors.T @ (system.u0 - system.steady_state())
    decay = np.exp(np.multiply.outer(t_arr, rates)) * coefficients
    return heat_spectral_solution(system, t_arr), (decay * rates) @ vectors.T
