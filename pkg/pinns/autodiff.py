"""
Differentiation engine for the fixed tanh MLP/ResNet topology.

Three layers of derivatives are needed to train and diagnose a PINN:

1. d(network)/dt, the input tangent, propagated alongside the forward pass
   (extended_forward). The residual loss consumes it.
2. Weight gradients by reverse accumulation through the *extended* map
   t -> (u, u_t), using hand-written layer adjoints (backward).
3. Hessian-vector products, forward-over-reverse: the reverse pass is written
   against a tiny array protocol, so running it on Dual arrays whose tangent
   is the direction v yields H v as the tangent of the gradient.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, NumericalOverflowError
from .networks import NetworkConfig, ParamVector, build_layout, check_params, split_flat

logger = logging.getLogger(__name__)


class Dual:
    """
    Dual number (value, tangent) over floats or numpy arrays.

    (a, a')(b, b') = (ab, ab' + a'b) and tanh(a, a') = (tanh a, a'(1 - tanh^2 a)).
    Tangents are broadcast to the value's shape on construction.
    """

    __slots__ = ('value', 'tangent')
    # make numpy hand mixed expressions to our reflected operators
    __array_ufunc__ = None

    def __init__(self, value, tangent=None):
        if tangent is None:
            tangent = np.zeros_like(value, dtype=np.float64)
        elif np.shape(tangent) != np.shape(value):
            tangent = np.broadcast_to(tangent, np.shape(value))
        self.value = value
        self.tangent = tangent

    def __repr__(self):
        return f'Dual({self.value!r}, {self.tangent!r})'

    @property
    def shape(self):
        return np.shape(self.value)

    @property
    def T(self):
        return Dual(self.value.T, self.tangent.T)

    def __getitem__(self, index):
        return Dual(self.value[index], self.tangent[index])

    def reshape(self, *shape):
        return Dual(self.value.reshape(*shape), self.tangent.reshape(*shape))

    def ravel(self):
        return Dual(np.ravel(self.value), np.ravel(self.tangent))

    def sum(self, axis=None):
        return Dual(np.sum(self.value, axis=axis), np.sum(self.tangent, axis=axis))

    def tanh(self):
        a = np.tanh(self.value)
        return Dual(a, self.tangent * (1.0 - a * a))

    def __neg__(self):
        return Dual(-self.value, -self.tangent)

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.tangent + other.tangent)
        return Dual(self.value + other, self.tangent)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.tangent - other.tangent)
        return Dual(self.value - other, self.tangent)

    def __rsub__(self, other):
        return Dual(other - self.value, -self.tangent)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value * other.value,
                        self.value * other.tangent + self.tangent * other.value)
        return Dual(self.value * other, self.tangent * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value / other.value,
                        (self.tangent * other.value - self.value * other.tangent) / (other.value * other.value))
        return Dual(self.value / other, self.tangent / other)

    def __matmul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value @ other.value,
                        self.tangent @ other.value + self.value @ other.tangent)
        return Dual(self.value @ other, self.tangent @ other)

    def __rmatmul__(self, other):
        return Dual(other @ self.value, other @ self.tangent)


def tanh(x):
    return x.tanh() if isinstance(x, Dual) else np.tanh(x)


def value_of(x):
    return x.value if isinstance(x, Dual) else x


def concatenate(parts):
    """np.concatenate that keeps tangents when any part is dual."""
    if any(isinstance(p, Dual) for p in parts):
        return Dual(np.concatenate([np.ravel(value_of(p)) for p in parts]),
                    np.concatenate([np.ravel(p.tangent) if isinstance(p, Dual)
                                    else np.zeros(np.size(p)) for p in parts]))
    return np.concatenate([np.ravel(p) for p in parts])


@dataclass(frozen=True)
class LayerTrace:
    """Values and input-tangents of one hidden layer."""

    activation: object   # a = tanh(z)
    z_dot: object        # dz/dt
    hidden: object       # h (after the skip, if any)
    hidden_dot: object   # dh/dt


@dataclass(frozen=True)
class EvalRecord:
    times: np.ndarray    # (B, 1)
    layers: tuple        # one LayerTrace per hidden layer

    def __len__(self):
        return len(self.layers)


@dataclass(frozen=True)
class GradResult:
    loss_value: float
    gradient: np.ndarray


def extended_forward(config: NetworkConfig, layers, times):
    """
    Batched forward pass carrying d/dt. `layers` is [(W, b), ...], plain or dual.

    Returns (U, U_t, record) with U, U_t of shape (B, N).
    """
    inputs = np.asarray(times, dtype=np.float64).reshape(-1, 1)
    ones = np.ones_like(inputs)
    resnet = config.is_resnet
    traces = []

    weight, bias = layers[0]
    z = inputs @ weight.T + bias
    z_dot = ones @ weight.T
    a = tanh(z)
    a_dot = (1.0 - a * a) * z_dot
    h, h_dot = a, a_dot
    if resnet and config.first_layer_skip:
        h = h + inputs
        h_dot = h_dot + 1.0
    traces.append(LayerTrace(a, z_dot, h, h_dot))

    for weight, bias in layers[1:-1]:
        z = h @ weight.T + bias
        z_dot = h_dot @ weight.T
        a = tanh(z)
        a_dot = (1.0 - a * a) * z_dot
        if resnet:
            h, h_dot = h + a, h_dot + a_dot
        else:
            h, h_dot = a, a_dot
        traces.append(LayerTrace(a, z_dot, h, h_dot))

    weight, bias = layers[-1]
    u = h @ weight.T + bias
    u_t = h_dot @ weight.T
    return u, u_t, EvalRecord(inputs, tuple(traces))


def backward(config: NetworkConfig, layers, record: EvalRecord, g_u, g_ut) -> list:
    """
    Reverse pass of extended_forward given dL/dU and dL/dU_t.

    Returns [(dL/dW, dL/db), ...] in layer order.
    """
    depth = len(record)
    grads = [None] * len(layers)

    out_weight, _ = layers[-1]
    last = record.layers[-1]
    grads[-1] = (g_u.T @ last.hidden + g_ut.T @ last.hidden_dot, g_u.sum(axis=0))
    g_h = g_u @ out_weight
    g_hd = g_ut @ out_weight

    for k in range(depth - 1, -1, -1):
        trace = record.layers[k]
        weight, _ = layers[k]
        a = trace.activation
        slope = 1.0 - a * a
        g_zd = g_hd * slope
        g_z = (g_h - 2.0 * a * (g_hd * trace.z_dot)) * slope

        if k == 0:
            inputs, inputs_dot = record.times, np.ones_like(record.times)
        else:
            inputs, inputs_dot = record.layers[k - 1].hidden, record.layers[k - 1].hidden_dot
        grads[k] = (g_z.T @ inputs + g_zd.T @ inputs_dot, g_z.sum(axis=0))

        if k > 0:
            next_g_h = g_z @ weight
            next_g_hd = g_zd @ weight
            if config.is_resnet:
                next_g_h = next_g_h + g_h
                next_g_hd = next_g_hd + g_hd
            g_h, g_hd = next_g_h, next_g_hd

    return grads


def flatten_grads(grads):
    parts = []
    for g_w, g_b in grads:
        parts.append(g_w)
        parts.append(g_b)
    return concatenate(parts)


def eval_with_input_tangent(config: NetworkConfig, params, t: float):
    """u(t), du/dt and the evaluation record for a single time."""
    values = check_params(config, params)
    layers = split_flat(build_layout(config), values)
    u, u_t, record = extended_forward(config, layers, np.array([t], dtype=np.float64))
    return u[0], u_t[0], record


class Objective(ABC):
    """
    Scalar loss of the flat parameter vector.

    value_and_grad must accept either an ndarray or a Dual whose tangent is a
    weight-space direction; hvp relies on the latter.
    """

    @abstractmethod
    def value_and_grad(self, w):
        """Return (loss, gradient) at w."""

    def __call__(self, w):
        return self.value_and_grad(w)[0]


class QuadraticObjective(Objective):
    """L(w) = 1/2 w^T Q w + offset; exact Hessian Q."""

    def __init__(self, Q, offset: float = 0.0):
        Q = np.asarray(Q, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ConfigurationError(f'Q must be square, got {Q.shape}')
        self.Q = Q
        self.offset = float(offset)

    @classmethod
    def diagonal(cls, a) -> 'QuadraticObjective':
        """L(w) = sum a_i w_i^2."""
        return cls(np.diag(2.0 * np.asarray(a, dtype=np.float64)))

    @classmethod
    def constant(cls, size: int, value: float) -> 'QuadraticObjective':
        return cls(np.zeros((size, size)), offset=value)

    def value_and_grad(self, w):
        Qw = self.Q @ w
        return 0.5 * (w @ Qw) + self.offset, Qw


def _as_flat(params) -> np.ndarray:
    if isinstance(params, ParamVector):
        return params.values
    return np.asarray(params, dtype=np.float64)


def _check_finite(value, gradient, w):
    if not np.isfinite(value) or not np.all(np.isfinite(gradient)):
        norm = float(np.linalg.norm(w))
        raise NumericalOverflowError(
            f'non-finite loss ({value}) at parameter norm {norm:.6g}', param_norm=norm
        )


def grad_loss(loss: Objective, params) -> GradResult:
    w = _as_flat(params)
    value, gradient = loss.value_and_grad(w)
    value = float(value)
    gradient = np.asarray(gradient, dtype=np.float64)
    _check_finite(value, gradient, w)
    if gradient.shape != w.shape:
        raise ConfigurationError(f'gradient shape {gradient.shape} != parameter shape {w.shape}')
    return GradResult(value, gradient)


def hvp(loss: Objective, params, v) -> np.ndarray:
    """Hessian-vector product by pushing direction v through the gradient."""
    w = _as_flat(params)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != w.shape:
        raise ConfigurationError(f'direction has shape {v.shape}, parameters {w.shape}')
    value, gradient = loss.value_and_grad(Dual(w, v))
    _check_finite(float(value_of(value)), value_of(gradient), w)
    if not isinstance(gradient, Dual):
        # gradient does not depend on w
        return np.zeros_like(w)
    return np.array(gradient.tangent, dtype=np.float64)
