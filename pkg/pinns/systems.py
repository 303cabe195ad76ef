"""
Benchmark ODE systems: simple harmonic motion and the method-of-lines heat
equation. Both are linear, u' = A u + f, with A applied matrix-free.

Residual convention: N(u)(t) = u_t - A u - f, zero on exact solutions.
"""

import logging
import math
from abc import ABC, abstractmethod

import numpy as np
from django.db import models
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .autodiff import Dual
from .exceptions import ParameterError

logger = logging.getLogger(__name__)

SHM_OMEGA = 1.0
SHM_INITIAL_CONDITION = (0.0, math.pi / 2)
SHM_HORIZON_MULTIPLIERS = (1, 2, 4, 8, 16, 32)

HEAT_HORIZON = 0.1
HEAT_BOUNDARY_LEFT = 1.0
HEAT_BOUNDARY_RIGHT = 1.0
HEAT_SIZES = (4, 8, 16, 32, 64, 128, 256, 512)


class Benchmark(models.TextChoices):
    SHM = 'shm', 'Simple harmonic motion'
    HEAT = 'heat', 'Heat equation (method of lines)'


class IcScaling(models.TextChoices):
    # nu_I = ||A||_2 multiplies the initial-condition term
    INITIAL_CONDITION = 'initial_condition', 'Scale initial-condition term'
    # nu_I = 1, residual term divided by ||A||_2
    RESIDUAL = 'residual', 'Normalise residual term'


class OdeSystem(ABC):
    """Linear system u' = A u + f on [0, horizon] with u(0) = u0."""

    benchmark = None

    def __init__(self, u0, horizon: float, nu_ic: float, forcing=None, residual_scale: float = 1.0):
        if horizon <= 0:
            raise ParameterError(f'horizon must be positive, got {horizon}')
        if nu_ic <= 0:
            raise ParameterError(f'initial-condition weight must be positive, got {nu_ic}')
        self.u0 = np.asarray(u0, dtype=np.float64)
        self.horizon = float(horizon)
        self.nu_ic = float(nu_ic)
        self.forcing = np.zeros_like(self.u0) if forcing is None else np.asarray(forcing, dtype=np.float64)
        self.residual_scale = float(residual_scale)

    @property
    def dim(self) -> int:
        return self.u0.shape[0]

    @abstractmethod
    def _apply(self, u: np.ndarray) -> np.ndarray:
        """A u along the last axis."""

    @abstractmethod
    def _apply_transpose(self, r: np.ndarray) -> np.ndarray:
        """A^T r along the last axis."""

    @abstractmethod
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of A (possibly complex)."""

    @abstractmethod
    def describe(self) -> dict:
        """Descriptor accepted by system_from_descriptor."""

    @property
    @abstractmethod
    def complexity(self):
        """The sweep's complexity value for this system."""

    def apply_generator(self, u):
        if isinstance(u, Dual):
            return Dual(self._apply(u.value), self._apply(u.tangent))
        return self._apply(np.asarray(u, dtype=np.float64))

    def apply_generator_transpose(self, r):
        if isinstance(r, Dual):
            return Dual(self._apply_transpose(r.value), self._apply_transpose(r.tangent))
        return self._apply_transpose(np.asarray(r, dtype=np.float64))

    def residual(self, t, u, u_t):
        return u_t - self.apply_generator(u) - self.forcing

    def rhs(self, t, u):
        return self._apply(u) + self.forcing

    def spectral_norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues())))

    def assemble_generator(self):
        """Explicit sparse A, for oracles and diagnostics."""
        return sparse.csr_matrix(self._apply(np.eye(self.dim)).T)

    def residual_trace_divisor(self) -> float:
        return 1.0

    def ic_trace_divisor(self) -> float:
        return 1.0

    def __repr__(self):
        return f'<{type(self).__name__}({self.describe()})>'


class HarmonicOscillator(OdeSystem):
    """u' = A u with A = [[0, -omega], [omega, 0]]."""

    benchmark = Benchmark.SHM

    def __init__(self, omega: float, horizon: float, u0=SHM_INITIAL_CONDITION):
        if omega <= 0:
            raise ParameterError(f'omega must be positive, got {omega}')
        super().__init__(u0, horizon, nu_ic=1.0)
        self.omega = float(omega)
        self.generator = np.array([[0.0, -self.omega], [self.omega, 0.0]])

    def _apply(self, u):
        return u @ self.generator.T

    def _apply_transpose(self, r):
        return r @ self.generator

    def eigenvalues(self):
        return np.array([1j * self.omega, -1j * self.omega])

    @property
    def complexity(self):
        return self.horizon / math.pi

    def describe(self):
        return {'benchmark': Benchmark.SHM.value, 'omega': self.omega, 'horizon': self.horizon}


class HeatSystem(OdeSystem):
    """
    Heat equation on [0, 1] discretized on N nodes with a central second
    difference; Dirichlet data enters through the forcing f.
    """

    benchmark = Benchmark.HEAT

    def __init__(self, n_points: int, horizon: float = HEAT_HORIZON,
                 scaling: str = IcScaling.INITIAL_CONDITION,
                 u_left: float = HEAT_BOUNDARY_LEFT, u_right: float = HEAT_BOUNDARY_RIGHT):
        if n_points < 3:
            raise ParameterError(f'heat discretization needs at least 3 points, got {n_points}')
        if scaling not in IcScaling.values:
            raise ParameterError(f'unknown scaling {scaling!r}')
        self.n_points = int(n_points)
        self.scaling = IcScaling(scaling)
        self.u_left = float(u_left)
        self.u_right = float(u_right)

        inv_h2 = float((n_points - 1) ** 2)
        # columns: sub-diagonal, diagonal, super-diagonal (sub[0] and super[-1] unused)
        self.bands = np.empty((n_points, 3))
        self.bands[:, 0] = inv_h2
        self.bands[:, 1] = -2.0 * inv_h2
        self.bands[:, 2] = inv_h2

        forcing = np.zeros(n_points)
        forcing[0] = inv_h2 * self.u_left
        forcing[-1] = inv_h2 * self.u_right

        norm = float(np.max(np.abs(heat_eigenvalues(n_points))))
        if self.scaling == IcScaling.INITIAL_CONDITION:
            nu_ic, residual_scale = norm, 1.0
        else:
            nu_ic, residual_scale = 1.0, 1.0 / norm
        grid = np.linspace(0.0, 1.0, n_points)
        super().__init__(heat_initial_profile(grid), horizon, nu_ic=nu_ic,
                         forcing=forcing, residual_scale=residual_scale)

    def _apply(self, u):
        out = self.bands[:, 1] * u
        out[..., 1:] += self.bands[1:, 0] * u[..., :-1]
        out[..., :-1] += self.bands[:-1, 2] * u[..., 1:]
        return out

    def _apply_transpose(self, r):
        out = self.bands[:, 1] * r
        out[..., 1:] += self.bands[:-1, 2] * r[..., :-1]
        out[..., :-1] += self.bands[1:, 0] * r[..., 1:]
        return out

    def assemble_generator(self):
        n = self.n_points
        return sparse.diags(
            [self.bands[1:, 0], self.bands[:, 1], self.bands[:-1, 2]], [-1, 0, 1],
            shape=(n, n), format='csr',
        )

    def eigenvalues(self):
        return heat_eigenvalues(self.n_points)

    def steady_state(self) -> np.ndarray:
        """Solution of A u + f = 0; all ones for u_L = u_R = 1."""
        if self.u_left == self.u_right:
            return np.full(self.n_points, self.u_left)
        return spsolve(self.assemble_generator().tocsc(), -self.forcing)

    def residual_trace_divisor(self):
        return heat_condition_number(self.n_points)

    def ic_trace_divisor(self):
        return float(self.n_points)

    @property
    def complexity(self):
        return self.n_points

    def describe(self):
        return {
            'benchmark': Benchmark.HEAT.value,
            'n_points': self.n_points,
            'horizon': self.horizon,
            'scaling': self.scaling.value,
        }


def heat_initial_profile(x):
    return np.sin(2.0 * np.pi * np.asarray(x, dtype=np.float64)) + 1.0


def heat_eigenvalues(n_points: int) -> np.ndarray:
    """e_n = -2 (N-1)^2 (1 - cos(n pi / (N+1))), n = 1..N."""
    if n_points < 3:
        raise ParameterError(f'heat discretization needs at least 3 points, got {n_points}')
    n = np.arange(1, n_points + 1)
    return -2.0 * (n_points - 1) ** 2 * (1.0 - np.cos(n * np.pi / (n_points + 1)))


def heat_eigenvectors(n_points: int) -> np.ndarray:
    """Orthonormal eigenvectors of the Toeplitz generator as columns."""
    k = np.arange(1, n_points + 1)
    vectors = np.sin(np.outer(k, k) * np.pi / (n_points + 1))
    return vectors * np.sqrt(2.0 / (n_points + 1))


def heat_condition_number(n_points: int) -> float:
    e = heat_eigenvalues(n_points)
    return float(abs(e[-1]) / abs(e[0]))


def make_shm(omega: float, T: float) -> HarmonicOscillator:
    return HarmonicOscillator(omega, T)


def make_heat(n_points: int, T: float = HEAT_HORIZON, scaling: str = IcScaling.INITIAL_CONDITION) -> HeatSystem:
    return HeatSystem(n_points, T, scaling=scaling)


def make_benchmark_system(benchmark: str, complexity, scaling: str = IcScaling.INITIAL_CONDITION) -> OdeSystem:
    """SHM complexity c gives T = c*pi; heat complexity is the grid size N."""
    if benchmark == Benchmark.SHM:
        return make_shm(SHM_OMEGA, float(complexity) * math.pi)
    if benchmark == Benchmark.HEAT:
        return make_heat(int(complexity), HEAT_HORIZON, scaling=scaling)
    raise ParameterError(f'unknown benchmark {benchmark!r}')


def system_from_descriptor(descriptor: dict) -> OdeSystem:
    benchmark = descriptor.get('benchmark')
    if benchmark == Benchmark.SHM:
        return make_shm(descriptor.get('omega', SHM_OMEGA), descriptor['horizon'])
    if benchmark == Benchmark.HEAT:
        return make_heat(descriptor['n_points'], descriptor.get('horizon', HEAT_HORIZON),
                         scaling=descriptor.get('scaling', IcScaling.INITIAL_CONDITION))
    raise ParameterError(f'unknown benchmark {benchmark!r}')
