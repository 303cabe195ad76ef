"""Small builders shared by the library tests."""

import math

import numpy as np

from pinns.networks import NetworkConfig, init_params
from pinns.systems import make_heat, make_shm
from pinns.training import TrainingConfig


def shm_config(depth=2, width=8, arch='mlp', D=8, horizon=math.pi, **kwargs) -> TrainingConfig:
    network = NetworkConfig(depth=depth, width=width, output_dim=2, arch=arch)
    return TrainingConfig(network=network, system=make_shm(1.0, horizon), D=D, **kwargs)


def heat_config(n_points=4, depth=2, width=8, arch='mlp', D=8, **kwargs) -> TrainingConfig:
    scaling = kwargs.pop('scaling', 'initial_condition')
    network = NetworkConfig(depth=depth, width=width, output_dim=n_points, arch=arch)
    return TrainingConfig(network=network, system=make_heat(n_points, scaling=scaling), D=D, **kwargs)


def random_params(config: TrainingConfig, seed=0, scale=1.0):
    """Glorot weights plus non-zero biases so every parameter matters."""
    params = init_params(config.network, seed)
    rng = np.random.default_rng(seed + 1000)
    return params.replace(scale * params.values + 0.1 * rng.standard_normal(len(params)))


def central_difference_gradient(objective, w, eps=1e-6):
    grad = np.zeros_like(w)
    for i in range(w.shape[0]):
        step = np.zeros_like(w)
        step[i] = eps
        grad[i] = (objective(w + step) - objective(w - step)) / (2.0 * eps)
    return grad


def relative_error(actual, expected) -> float:
    return float(np.linalg.norm(actual - expected) / max(np.linalg.norm(expected), 1e-300))
