"""
PINN objectives and the training loop.

Uniform loss:   reduce_d ||N(u_w)(t_d)||^2 + nu_I ||u_w(0) - u0||^2
Adaptive loss:  1/D sum_d mu(l_d) ||N(u_w)(t_d)||^2 + mu(l_0) nu_I ||u_w(0) - u0||^2
with mu the logistic sigmoid, minimised over w and maximised over l.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from django.db import models
from scipy.special import expit
from tqdm import tqdm

from .autodiff import Objective, backward, extended_forward, flatten_grads
from .exceptions import ConfigurationError, DivergenceError, ParameterError
from .networks import NetworkConfig, ParamVector, build_layout, check_params, init_params, split_flat
from .systems import OdeSystem, system_from_descriptor

logger = logging.getLogger(__name__)

DEFAULT_ITERATIONS = 10_241
CHECKPOINT_EVERY = 64
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


class Formulation(models.TextChoices):
    UNIFORM = 'uniform', 'Uniform'
    ADAPTIVE = 'adaptive', 'Adaptive (min-max)'


class ResidualReduction(models.TextChoices):
    MEAN = 'mean', 'Mean over collocation points'
    SUM = 'sum', 'Sum over collocation points'


class Component(models.TextChoices):
    RESIDUAL = 'residual', 'Residual'
    INITIAL_CONDITION = 'initial_condition', 'Initial condition'
    TOTAL = 'total', 'Total'


@dataclass(frozen=True)
class CollocationSet:
    train_points: np.ndarray  # kT/D, k = 1..D
    eval_points: np.ndarray   # (2k+1)T/(2D), k = 1..D-1


def make_collocation(T: float, D: int) -> CollocationSet:
    if T <= 0:
        raise ParameterError(f'horizon must be positive, got {T}')
    if D < 2:
        raise ParameterError(f'need at least 2 training points, got {D}')
    k = np.arange(1, D + 1)
    train = k * T / D
    train[-1] = T
    midpoints = (2 * np.arange(1, D) + 1) * T / (2 * D)
    return CollocationSet(train, midpoints)


@dataclass(frozen=True)
class TrainingConfig:
    network: NetworkConfig
    system: OdeSystem
    formulation: str = Formulation.UNIFORM
    learning_rate: float = 1e-3
    iterations: int = DEFAULT_ITERATIONS
    D: int = 256
    seed: int = 0
    residual_reduction: str = ResidualReduction.MEAN
    lambda_lr: float = None
    checkpoint_every: int = CHECKPOINT_EVERY
    # 0 disables mid-training Laplacian snapshots
    trace_every: int = 0
    trace_probes: int = 8

    def __post_init__(self):
        if self.iterations <= 0:
            raise ParameterError(f'iterations must be positive, got {self.iterations}')
        if self.D < 2:
            raise ParameterError(f'D must be >= 2, got {self.D}')
        if self.learning_rate <= 0:
            raise ParameterError(f'learning rate must be positive, got {self.learning_rate}')
        if self.checkpoint_every <= 0:
            raise ParameterError('checkpoint_every must be positive')
        if self.formulation not in Formulation.values:
            raise ParameterError(f'unknown formulation {self.formulation!r}')
        if self.residual_reduction not in ResidualReduction.values:
            raise ParameterError(f'unknown residual reduction {self.residual_reduction!r}')
        if self.network.output_dim != self.system.dim:
            raise ConfigurationError(
                f'network output_dim {self.network.output_dim} != system dimension {self.system.dim}'
            )
        object.__setattr__(self, 'formulation', Formulation(self.formulation))
        object.__setattr__(self, 'residual_reduction', ResidualReduction(self.residual_reduction))
        if self.lambda_lr is None:
            object.__setattr__(self, 'lambda_lr', self.learning_rate)

    @property
    def collocation(self) -> CollocationSet:
        return make_collocation(self.system.horizon, self.D)

    def to_dict(self) -> dict:
        return {
            'network': self.network.to_dict(),
            'system': self.system.describe(),
            'formulation': self.formulation.value,
            'learning_rate': self.learning_rate,
            'iterations': self.iterations,
            'D': self.D,
            'seed': self.seed,
            'residual_reduction': self.residual_reduction.value,
            'lambda_lr': self.lambda_lr,
            'checkpoint_every': self.checkpoint_every,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'TrainingConfig':
        data = dict(data)
        data['network'] = NetworkConfig.from_dict(data['network'])
        data['system'] = system_from_descriptor(data['system'])
        return cls(**data)


@dataclass(frozen=True)
class LossComponents:
    residual_loss: float
    ic_loss: float
    total: float

    def to_dict(self) -> dict:
        return {'residual_loss': self.residual_loss, 'ic_loss': self.ic_loss, 'total': self.total}


@dataclass(frozen=True)
class PinnEvaluation:
    value: object
    gradient: object
    point_losses: object  # ||N(u_w)(t_d)||^2 per training point, unweighted
    ic_error: object      # ||u_w(0) - u0||^2, unweighted


class PinnObjective(Objective):
    """
    Weighted PINN loss over {0} and the training points.

    Row 0 of the batch is t = 0 and only feeds the initial-condition term;
    rows 1..D carry residual weights.
    """

    def __init__(self, config: TrainingConfig, residual_weights, ic_weight: float):
        self.config = config
        self.network = config.network
        self.system = config.system
        self.layout = build_layout(config.network)
        self.times = np.concatenate([[0.0], config.collocation.train_points])
        weights = np.zeros(self.times.shape[0])
        weights[1:] = residual_weights
        self.row_weights = weights
        self.ic_weight = float(ic_weight)
        self._ic_rows = np.zeros((self.times.shape[0], 1))
        self._ic_rows[0, 0] = 2.0 * self.ic_weight

    @classmethod
    def uniform(cls, config: TrainingConfig, component: str = Component.TOTAL) -> 'PinnObjective':
        D = config.D
        base = 1.0 / D if config.residual_reduction == ResidualReduction.MEAN else 1.0
        residual = np.full(D, base * config.system.residual_scale)
        ic_weight = config.system.nu_ic
        if component == Component.RESIDUAL:
            ic_weight = 0.0
        elif component == Component.INITIAL_CONDITION:
            residual = np.zeros(D)
        return cls(config, residual, ic_weight)

    @classmethod
    def adaptive(cls, config: TrainingConfig, lam) -> 'PinnObjective':
        lam = np.asarray(lam, dtype=np.float64)
        if lam.shape != (config.D + 1,):
            raise ConfigurationError(f'attention weights need shape ({config.D + 1},), got {lam.shape}')
        mask = expit(lam)
        residual = mask[1:] / config.D * config.system.residual_scale
        return cls(config, residual, mask[0] * config.system.nu_ic)

    def evaluate(self, w) -> PinnEvaluation:
        layers = split_flat(self.layout, w)
        u, u_t, record = extended_forward(self.network, layers, self.times)
        residual = self.system.residual(self.times, u, u_t)
        mismatch = u - self.system.u0
        point = (residual * residual).sum(axis=1)
        ic = (mismatch * mismatch).sum(axis=1)
        value = self.row_weights @ point + self.ic_weight * ic[0]

        g_residual = (2.0 * self.row_weights)[:, None] * residual
        g_u = self._ic_rows * mismatch - self.system.apply_generator_transpose(g_residual)
        grads = backward(self.network, layers, record, g_u, g_residual)
        return PinnEvaluation(value, flatten_grads(grads), point[1:], ic[0])

    def value_and_grad(self, w):
        evaluation = self.evaluate(w)
        return evaluation.value, evaluation.gradient


def _components_from(config: TrainingConfig, point_losses, ic_error) -> LossComponents:
    if config.residual_reduction == ResidualReduction.MEAN:
        residual = float(np.mean(point_losses))
    else:
        residual = float(np.sum(point_losses))
    residual *= config.system.residual_scale
    ic = config.system.nu_ic * float(ic_error)
    return LossComponents(residual, ic, residual + ic)


def _ensure_finite(components: LossComponents, iteration=None, params=None):
    if not all(np.isfinite([components.residual_loss, components.ic_loss, components.total])):
        norm = float(np.linalg.norm(params)) if params is not None else None
        where = f' at iteration {iteration}' if iteration is not None else ''
        raise DivergenceError(f'non-finite loss{where}: {components}', iteration=iteration, param_norm=norm)


def loss_components(config: TrainingConfig, params) -> LossComponents:
    values = check_params(config.network, params)
    evaluation = PinnObjective.uniform(config).evaluate(values)
    components = _components_from(config, evaluation.point_losses, evaluation.ic_error)
    _ensure_finite(components, params=values)
    return components


def adaptive_loss(config: TrainingConfig, params, lam) -> float:
    values = check_params(config.network, params)
    value = float(PinnObjective.adaptive(config, lam).evaluate(values).value)
    if not np.isfinite(value):
        raise DivergenceError(f'non-finite adaptive loss {value}', param_norm=float(np.linalg.norm(values)))
    return value


def _lambda_gradient(config: TrainingConfig, lam, point_losses, ic_error) -> np.ndarray:
    mask = expit(lam)
    slope = mask * (1.0 - mask)
    grad = np.empty_like(lam)
    grad[0] = slope[0] * config.system.nu_ic * ic_error
    grad[1:] = slope[1:] * point_losses * config.system.residual_scale / config.D
    return grad


def adaptive_lambda_gradient(config: TrainingConfig, params, lam) -> np.ndarray:
    """dL/dlambda of the adaptive loss; non-negative componentwise."""
    values = check_params(config.network, params)
    lam = np.asarray(lam, dtype=np.float64)
    evaluation = PinnObjective.adaptive(config, lam).evaluate(values)
    return _lambda_gradient(config, lam, evaluation.point_losses, float(evaluation.ic_error))


@dataclass(frozen=True)
class AdamMoments:
    first: np.ndarray
    second: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, size: int) -> 'AdamMoments':
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_update(moments: AdamMoments, gradient, lr: float):
    """Returns (descent increment, new moments)."""
    step = moments.step + 1
    first = ADAM_BETA1 * moments.first + (1.0 - ADAM_BETA1) * gradient
    second = ADAM_BETA2 * moments.second + (1.0 - ADAM_BETA2) * (gradient * gradient)
    first_hat = first / (1.0 - ADAM_BETA1 ** step)
    second_hat = second / (1.0 - ADAM_BETA2 ** step)
    delta = -lr * first_hat / (np.sqrt(second_hat) + ADAM_EPSILON)
    return delta, AdamMoments(first, second, step)


@dataclass(frozen=True)
class TrainState:
    params: ParamVector
    adam: AdamMoments
    lam: np.ndarray
    lam_adam: AdamMoments

    @classmethod
    def initial(cls, config: TrainingConfig) -> 'TrainState':
        params = init_params(config.network, config.seed)
        n_lam = config.D + 1
        return cls(params, AdamMoments.zeros(len(params)), np.zeros(n_lam), AdamMoments.zeros(n_lam))


def adam_step(state: TrainState, gradient, lr: float) -> TrainState:
    gradient = np.asarray(gradient, dtype=np.float64)
    if not np.all(np.isfinite(gradient)):
        raise DivergenceError('non-finite gradient', iteration=state.adam.step,
                              param_norm=float(np.linalg.norm(state.params.values)))
    delta, moments = adam_update(state.adam, gradient, lr)
    return replace(state, params=state.params.replace(state.params.values + delta), adam=moments)


def lambda_ascent_step(state: TrainState, gradient, lr: float) -> TrainState:
    delta, moments = adam_update(state.lam_adam, -np.asarray(gradient, dtype=np.float64), lr)
    return replace(state, lam=state.lam + delta, lam_adam=moments)


@dataclass
class TrainReport:
    config: TrainingConfig
    params: ParamVector
    final: LossComponents = None
    loss_history: list = field(default_factory=list)
    lambda_history: list = field(default_factory=list)
    trace_history: list = field(default_factory=list)
    iterations_completed: int = 0
    diverged: bool = False
    divergence_message: str = ''
    divergence_iteration: int = None

    def to_dict(self) -> dict:
        return {
            'config': self.config.to_dict(),
            'iterations_completed': self.iterations_completed,
            'diverged': self.diverged,
            'divergence_message': self.divergence_message,
            'divergence_iteration': self.divergence_iteration,
            'final': self.final.to_dict() if self.final else None,
            'loss_history': self.loss_history,
            'lambda_history': self.lambda_history,
            'trace_history': self.trace_history,
            'parameter_count': len(self.params),
        }


def _lambda_summary(iteration: int, lam) -> dict:
    mask = expit(lam)
    return {
        'iteration': iteration,
        'ic_weight': float(mask[0]),
        'min': float(mask[1:].min()),
        'mean': float(mask[1:].mean()),
        'max': float(mask[1:].max()),
    }


def train(config: TrainingConfig, progress: bool = False) -> TrainReport:
    """
    Full-batch Adam on the chosen formulation. Divergence ends the run early and
    is reported, keeping the last finite parameters.
    """
    from .diagnostics import normalized_laplacians

    adaptive = config.formulation == Formulation.ADAPTIVE
    state = TrainState.initial(config)
    uniform_objective = PinnObjective.uniform(config)
    report = TrainReport(config=config, params=state.params)

    iterations = range(config.iterations)
    if progress:
        iterations = tqdm(iterations, desc='train', unit='it', leave=False)

    for iteration in iterations:
        objective = PinnObjective.adaptive(config, state.lam) if adaptive else uniform_objective
        try:
            evaluation = objective.evaluate(state.params.values)
            components = _components_from(config, evaluation.point_losses, evaluation.ic_error)
            _ensure_finite(components, iteration, state.params.values)

            if iteration % config.checkpoint_every == 0:
                report.loss_history.append({'iteration': iteration, **components.to_dict()})
                if adaptive:
                    report.lambda_history.append(_lambda_summary(iteration, state.lam))
                logger.debug('iteration %d: %s', iteration, components)
            if config.trace_every and iteration % config.trace_every == 0:
                res, ic = normalized_laplacians(config.system, config, state.params,
                                                config.trace_probes, config.seed)
                report.trace_history.append({'iteration': iteration, 'residual': res, 'initial_condition': ic})

            next_state = adam_step(state, evaluation.gradient, config.learning_rate)
            if adaptive:
                lam_grad = _lambda_gradient(config, state.lam, evaluation.point_losses,
                                            float(evaluation.ic_error))
                next_state = lambda_ascent_step(next_state, lam_grad, config.lambda_lr)
            state = next_state
        except DivergenceError as exc:
            exc.iteration = iteration
            report.diverged = True
            report.divergence_message = str(exc)
            report.divergence_iteration = iteration
            logger.warning('Training diverged at iteration %d: %s', iteration, exc)
            break
        report.iterations_completed = iteration + 1

    report.params = state.params
    if adaptive:
        report.lambda_history.append(_lambda_summary(report.iterations_completed, state.lam))
    try:
        report.final = loss_components(config, state.params)
    except DivergenceError as exc:
        report.diverged = True
        report.divergence_message = report.divergence_message or str(exc)
    return report
