"""
Sweep configuration documents.

A config is a flat key-value document; pairs are separated by newlines or
top-level commas, lists are written in brackets, `#` starts a comment:

    benchmark = shm
    complexity = [1, 2, 4]
    depth = [2, 4], width = 64
    seeds = [0, 1, 2]

Keys: benchmark, complexity, depth, width, lr, arch, formulation, iterations,
seed/seeds, D, residual_reduction, rtol, atol, probes, lambda_lr, scaling, out.
Grid keys default to the full 48-configuration grid.
"""

import itertools
import math
import re
from dataclasses import dataclass
from pathlib import Path

from django.conf import settings
from rest_framework import serializers

from pinns.exceptions import ConfigParseError
from pinns.networks import Architecture, NetworkConfig
from pinns.systems import HEAT_SIZES, SHM_HORIZON_MULTIPLIERS, Benchmark, IcScaling, make_benchmark_system
from pinns.training import DEFAULT_ITERATIONS, Formulation, ResidualReduction, TrainingConfig

GRID_DEPTHS = (2, 4, 8)
GRID_WIDTHS = (64, 128)
GRID_LEARNING_RATES = (1e-3, 1e-4)
GRID_ARCHS = (Architecture.MLP.value, Architecture.RESNET.value)
GRID_FORMULATIONS = (Formulation.UNIFORM.value, Formulation.ADAPTIVE.value)

HEAT_POINTS = 1024
SHM_POINTS_PER_PI = 256

KEY_ALIASES = {'seed': 'seeds', 'learning_rate': 'lr', 'd': 'D'}
LIST_KEYS = {'complexity', 'depth', 'width', 'lr', 'arch', 'formulation', 'seeds'}

_PAIR_SPLIT = re.compile(r',(?![^\[]*\])')


class SweepSpecSerializer(serializers.Serializer):
    benchmark = serializers.ChoiceField(choices=Benchmark.choices)
    complexity = serializers.ListField(child=serializers.FloatField(), min_length=1)
    depth = serializers.ListField(child=serializers.ChoiceField(choices=GRID_DEPTHS),
                                  min_length=1, default=lambda: list(GRID_DEPTHS))
    width = serializers.ListField(child=serializers.ChoiceField(choices=GRID_WIDTHS),
                                  min_length=1, default=lambda: list(GRID_WIDTHS))
    lr = serializers.ListField(child=serializers.FloatField(), min_length=1,
                               default=lambda: list(GRID_LEARNING_RATES))
    arch = serializers.ListField(child=serializers.ChoiceField(choices=Architecture.choices),
                                 min_length=1, default=lambda: list(GRID_ARCHS))
    formulation = serializers.ListField(child=serializers.ChoiceField(choices=Formulation.choices),
                                        min_length=1, default=lambda: list(GRID_FORMULATIONS))
    seeds = serializers.ListField(child=serializers.IntegerField(min_value=0), min_length=1,
                                  default=lambda: [0])
    iterations = serializers.IntegerField(min_value=1, default=DEFAULT_ITERATIONS)
    D = serializers.IntegerField(min_value=2, required=False)
    residual_reduction = serializers.ChoiceField(choices=ResidualReduction.choices,
                                                 default=ResidualReduction.MEAN.value)
    rtol = serializers.FloatField(required=False)
    atol = serializers.FloatField(required=False)
    probes = serializers.IntegerField(min_value=0, required=False)
    lambda_lr = serializers.FloatField(required=False)
    scaling = serializers.ChoiceField(choices=IcScaling.choices, default=IcScaling.INITIAL_CONDITION.value)
    out = serializers.CharField(required=False)

    def validate_lr(self, value):
        if any(lr <= 0 for lr in value):
            raise serializers.ValidationError('learning rates must be positive')
        return value

    def _positive(self, name, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError(f'{name} must be positive')
        return value

    def validate_rtol(self, value):
        return self._positive('rtol', value)

    def validate_atol(self, value):
        return self._positive('atol', value)

    def validate_lambda_lr(self, value):
        return self._positive('lambda_lr', value)

    def validate(self, attrs):
        values = attrs['complexity']
        if attrs['benchmark'] == Benchmark.SHM:
            allowed = SHM_HORIZON_MULTIPLIERS
            label = 'T/pi multipliers'
        else:
            allowed = HEAT_SIZES
            label = 'heat grid sizes'
        if any(v not in allowed for v in values):
            raise serializers.ValidationError(
                {'complexity': [f'allowed {label}: {", ".join(str(a) for a in allowed)}']}
            )
        attrs['complexity'] = sorted({int(v) for v in values})
        return attrs


@dataclass(frozen=True)
class RunSpec:
    """One training run of a sweep; plain data so it can cross process boundaries."""

    benchmark: str
    complexity: int
    seed: int
    depth: int
    width: int
    learning_rate: float
    arch: str
    formulation: str
    iterations: int
    D: int
    residual_reduction: str = ResidualReduction.MEAN.value
    lambda_lr: float = None
    scaling: str = IcScaling.INITIAL_CONDITION.value
    rtol: float = 1e-8
    atol: float = 1e-10
    probes: int = 64

    @property
    def run_id(self) -> str:
        return (f'{self.benchmark}-c{self.complexity}-s{self.seed}-d{self.depth}-w{self.width}'
                f'-lr{self.learning_rate:g}-{self.arch}-{self.formulation}')

    def training_config(self) -> TrainingConfig:
        system = make_benchmark_system(self.benchmark, self.complexity, scaling=self.scaling)
        network = NetworkConfig(depth=self.depth, width=self.width, output_dim=system.dim, arch=self.arch)
        return TrainingConfig(
            network=network,
            system=system,
            formulation=self.formulation,
            learning_rate=self.learning_rate,
            iterations=self.iterations,
            D=self.D,
            seed=self.seed,
            residual_reduction=self.residual_reduction,
            lambda_lr=self.lambda_lr,
        )


@dataclass(frozen=True)
class SweepSpec:
    benchmark: str
    complexity_values: tuple
    depths: tuple = GRID_DEPTHS
    widths: tuple = GRID_WIDTHS
    learning_rates: tuple = GRID_LEARNING_RATES
    archs: tuple = GRID_ARCHS
    formulations: tuple = GRID_FORMULATIONS
    seeds: tuple = (0,)
    iterations: int = DEFAULT_ITERATIONS
    D: int = None
    residual_reduction: str = ResidualReduction.MEAN.value
    rtol: float = 1e-8
    atol: float = 1e-10
    probes: int = 64
    lambda_lr: float = None
    scaling: str = IcScaling.INITIAL_CONDITION.value
    output_path: str = None

    @property
    def grid_size(self) -> int:
        return (len(self.depths) * len(self.widths) * len(self.learning_rates)
                * len(self.archs) * len(self.formulations))

    def points_for(self, complexity) -> int:
        if self.D is not None:
            return self.D
        if self.benchmark == Benchmark.SHM:
            return SHM_POINTS_PER_PI * int(complexity)
        return HEAT_POINTS

    def horizon_for(self, complexity) -> float:
        return make_benchmark_system(self.benchmark, complexity, scaling=self.scaling).horizon

    def runs(self) -> list:
        """Every (complexity, seed, grid point) combination, in output order."""
        runs = []
        for complexity, seed in itertools.product(self.complexity_values, self.seeds):
            for depth, width, lr, arch, formulation in itertools.product(
                    self.depths, self.widths, self.learning_rates, self.archs, self.formulations):
                runs.append(RunSpec(
                    benchmark=self.benchmark,
                    complexity=complexity,
                    seed=seed,
                    depth=depth,
                    width=width,
                    learning_rate=lr,
                    arch=arch,
                    formulation=formulation,
                    iterations=self.iterations,
                    D=self.points_for(complexity),
                    residual_reduction=self.residual_reduction,
                    lambda_lr=self.lambda_lr,
                    scaling=self.scaling,
                    rtol=self.rtol,
                    atol=self.atol,
                    probes=self.probes,
                ))
        return runs


def _parse_scalar(text: str):
    text = text.strip().strip('"').strip("'")
    for cast in (int, float):
        try:
            value = cast(text)
        except ValueError:
            continue
        if isinstance(value, float) and not math.isfinite(value):
            break
        return value
    return text.lower()


def _parse_value(text: str, key: str, line: int):
    text = text.strip()
    if text.startswith('['):
        if not text.endswith(']'):
            raise ConfigParseError('unterminated list', key=key, line=line)
        inner = text[1:-1].strip()
        return [_parse_scalar(item) for item in inner.split(',')] if inner else []
    if not text:
        raise ConfigParseError('missing value', key=key, line=line)
    return _parse_scalar(text)


def tokenize(text: str) -> tuple:
    """Returns ({key: value}, {key: line number})."""
    values, lines = {}, {}
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split('#', 1)[0].strip()
        if not content:
            continue
        for pair in _PAIR_SPLIT.split(content):
            pair = pair.strip()
            if not pair:
                continue
            if '=' not in pair:
                raise ConfigParseError(f'expected key=value, got {pair!r}', line=number)
            key, _, value = pair.partition('=')
            key = key.strip().lower()
            key = KEY_ALIASES.get(key, key)
            if key not in SweepSpecSerializer().fields:
                raise ConfigParseError('unknown key', key=key, line=number)
            if key in values:
                raise ConfigParseError('duplicate key', key=key, line=number)
            parsed = _parse_value(value, key, number)
            if key in LIST_KEYS and not isinstance(parsed, list):
                parsed = [parsed]
            values[key] = parsed
            lines[key] = number
    return values, lines


def _first_error(errors) -> str:
    if isinstance(errors, dict):
        return '; '.join(f'item {k}: {_first_error(v)}' for k, v in errors.items())
    if isinstance(errors, (list, tuple)):
        return '; '.join(_first_error(e) for e in errors)
    return str(errors)


def parse_config(text: str) -> SweepSpec:
    values, lines = tokenize(text)
    serializer = SweepSpecSerializer(data=values)
    if not serializer.is_valid():
        key, errors = next(iter(serializer.errors.items()))
        message = _first_error(errors)
        if key == 'depth':
            message += f' (allowed {{{", ".join(str(d) for d in GRID_DEPTHS)}}})'
        raise ConfigParseError(message, key=key, line=lines.get(key))

    data = serializer.validated_data
    defaults = getattr(settings, 'PINN_DEFAULTS', {})
    return SweepSpec(
        benchmark=data['benchmark'],
        complexity_values=tuple(data['complexity']),
        depths=tuple(data['depth']),
        widths=tuple(data['width']),
        learning_rates=tuple(float(lr) for lr in data['lr']),
        archs=tuple(data['arch']),
        formulations=tuple(data['formulation']),
        seeds=tuple(data['seeds']),
        iterations=data['iterations'],
        D=data.get('D'),
        residual_reduction=data['residual_reduction'],
        rtol=data.get('rtol', defaults.get('rtol', 1e-8)),
        atol=data.get('atol', defaults.get('atol', 1e-10)),
        probes=data.get('probes', defaults.get('probes', 64)),
        lambda_lr=data.get('lambda_lr'),
        scaling=data['scaling'],
        output_path=data.get('out'),
    )


def default_output(filename: str) -> Path:
    """`filename` under settings.PINN_OUTPUT_DIR."""
    return Path(getattr(settings, 'PINN_OUTPUT_DIR', 'results')) / filename
