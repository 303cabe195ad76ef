"""
MLP / ResNet architectures with a scalar time input and tanh hidden layers.

Parameters travel as one flat float64 vector (ParamVector) so the optimizer
and the curvature diagnostics can treat the network as a point w in R^M.
Layer shapes follow the usual (fan_out, fan_in) convention for weights.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from django.db import models

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 'pinn-params'
CHECKPOINT_VERSION = 1


class Architecture(models.TextChoices):
    MLP = 'mlp', 'MLP'
    RESNET = 'resnet', 'ResNet'


@dataclass(frozen=True)
class NetworkConfig:
    depth: int
    width: int
    output_dim: int
    arch: str = Architecture.MLP
    input_dim: int = 1
    # ResNet only: also skip t into the first hidden state
    first_layer_skip: bool = False

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigurationError(f'depth must be >= 1, got {self.depth}')
        if self.width < 1:
            raise ConfigurationError(f'width must be >= 1, got {self.width}')
        if self.output_dim < 1:
            raise ConfigurationError(f'output_dim must be >= 1, got {self.output_dim}')
        if self.input_dim != 1:
            raise ConfigurationError('only scalar time input is supported (input_dim=1)')
        if self.arch not in Architecture.values:
            raise ConfigurationError(f'unknown architecture {self.arch!r}')
        # normalise plain strings to the enum member
        object.__setattr__(self, 'arch', Architecture(self.arch))

    @property
    def is_resnet(self) -> bool:
        return self.arch == Architecture.RESNET

    def layer_shapes(self) -> list:
        """(weight_shape, bias_shape) per affine layer, input to output."""
        shapes = [((self.width, self.input_dim), (self.width,))]
        shapes += [((self.width, self.width), (self.width,))] * (self.depth - 1)
        shapes.append(((self.output_dim, self.width), (self.output_dim,)))
        return shapes

    def to_dict(self) -> dict:
        return {
            'depth': self.depth,
            'width': self.width,
            'output_dim': self.output_dim,
            'arch': str(self.arch.value),
            'input_dim': self.input_dim,
            'first_layer_skip': self.first_layer_skip,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'NetworkConfig':
        return cls(**data)


@dataclass(frozen=True)
class LayerSlot:
    layer: int
    kind: str  # 'weight' or 'bias'
    shape: tuple
    offset: int

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


def build_layout(config: NetworkConfig) -> tuple:
    slots = []
    offset = 0
    for index, (w_shape, b_shape) in enumerate(config.layer_shapes()):
        for kind, shape in (('weight', w_shape), ('bias', b_shape)):
            slot = LayerSlot(index, kind, tuple(shape), offset)
            slots.append(slot)
            offset += slot.size
    return tuple(slots)


@dataclass(frozen=True)
class ParamVector:
    """Flat parameter array plus the map back to per-layer weights and biases."""

    values: np.ndarray
    layout: tuple = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        expected = sum(slot.size for slot in self.layout)
        if values.ndim != 1 or values.shape[0] != expected:
            raise ConfigurationError(
                f'parameter vector has shape {values.shape}, layout needs ({expected},)'
            )
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return self.values.shape[0]

    @classmethod
    def for_config(cls, config: NetworkConfig, values) -> 'ParamVector':
        return cls(np.asarray(values, dtype=np.float64), build_layout(config))

    @classmethod
    def from_layers(cls, config: NetworkConfig, layers) -> 'ParamVector':
        layout = build_layout(config)
        return cls(flatten_layers(layers), layout)

    def unflatten(self) -> list:
        return split_flat(self.layout, self.values)

    def replace(self, values) -> 'ParamVector':
        return ParamVector(values, self.layout)


def split_flat(layout, flat) -> list:
    """
    Cut a flat vector into [(W, b), ...]. Works for ndarrays and for dual
    arrays carrying a weight-space tangent.
    """
    layers = []
    pending = None
    for slot in layout:
        piece = flat[slot.offset:slot.offset + slot.size].reshape(slot.shape)
        if slot.kind == 'weight':
            pending = piece
        else:
            layers.append((pending, piece))
    return layers


def flatten_layers(layers) -> np.ndarray:
    parts = []
    for weight, bias in layers:
        parts.append(np.asarray(weight, dtype=np.float64).ravel())
        parts.append(np.asarray(bias, dtype=np.float64).ravel())
    return np.concatenate(parts)


def param_count(config: NetworkConfig) -> int:
    w, n = config.width, config.output_dim
    return (config.input_dim * w + w) + (config.depth - 1) * (w * w + w) + (w * n + n)


def init_params(config: NetworkConfig, seed: int) -> ParamVector:
    """Glorot-uniform weights, zero biases; deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    layers = []
    for w_shape, b_shape in config.layer_shapes():
        fan_out, fan_in = w_shape
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        layers.append((rng.uniform(-bound, bound, size=w_shape), np.zeros(b_shape)))
    return ParamVector.from_layers(config, layers)


def check_params(config: NetworkConfig, params) -> np.ndarray:
    values = params.values if isinstance(params, ParamVector) else np.asarray(params, dtype=np.float64)
    expected = param_count(config)
    if values.ndim != 1 or values.shape[0] != expected:
        raise ConfigurationError(
            f'config {config.to_dict()} needs {expected} parameters, got {values.shape}'
        )
    return values


def forward(config: NetworkConfig, params, t) -> np.ndarray:
    """
    Network output at t (scalar -> shape (N,), array of D times -> (D, N)).

    The expression order matches pinns.autodiff.extended_forward so values
    agree bit-for-bit.
    """
    values = check_params(config, params)
    layers = split_flat(build_layout(config), values)
    scalar = np.ndim(t) == 0
    inputs = np.asarray(t, dtype=np.float64).reshape(-1, 1)

    weight, bias = layers[0]
    h = np.tanh(inputs @ weight.T + bias)
    if config.is_resnet and config.first_layer_skip:
        h = h + inputs
    for weight, bias in layers[1:-1]:
        a = np.tanh(h @ weight.T + bias)
        h = h + a if config.is_resnet else a
    weight, bias = layers[-1]
    out = h @ weight.T + bias
    return out[0] if scalar else out


def save_checkpoint(path, params: ParamVector, config: NetworkConfig, meta=None) -> Path:
    """One JSON header line, then M little-endian float64 values."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        'format': CHECKPOINT_FORMAT,
        'version': CHECKPOINT_VERSION,
        'dtype': '<f8',
        'count': len(params),
        'config': config.to_dict(),
        'layout': [
            {'layer': s.layer, 'kind': s.kind, 'shape': list(s.shape), 'offset': s.offset}
            for s in params.layout
        ],
        'meta': meta or {},
    }
    with open(path, 'wb') as fh:
        fh.write(json.dumps(header, sort_keys=True).encode('utf-8') + b'\n')
        fh.write(params.values.astype('<f8').tobytes())
    logger.debug('Wrote %d parameters to %s', len(params), path)
    return path


def load_checkpoint(path):
    """Returns (config, params, meta)."""
    with open(path, 'rb') as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f'{path}: not a parameter checkpoint') from exc
    if header.get('format') != CHECKPOINT_FORMAT:
        raise ConfigurationError(f'{path}: unexpected format {header.get("format")!r}')

    config = NetworkConfig.from_dict(header['config'])
    values = np.frombuffer(payload, dtype='<f8').astype(np.float64)
    if values.shape[0] != header['count']:
        raise ConfigurationError(
            f'{path}: header declares {header["count"]} values, payload holds {values.shape[0]}'
        )
    params = ParamVector.for_config(config, values)
    return config, params, header.get('meta', {})
