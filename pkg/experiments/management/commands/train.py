"""
Management command to train a single PINN and save its report and parameters.
"""
import json
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from experiments.config import RunSpec, SweepSpec, default_output
from pinns.diagnostics import evaluate_errors, laplacian_estimates
from pinns.exceptions import PinnError
from pinns.networks import Architecture, NetworkConfig, save_checkpoint
from pinns.systems import Benchmark, IcScaling, make_benchmark_system
from pinns.training import DEFAULT_ITERATIONS, Formulation, ResidualReduction, TrainingConfig, train


class Command(BaseCommand):
    help = 'Train one PINN configuration; writes a JSON report and a parameter checkpoint'

    def add_arguments(self, parser):
        parser.add_argument('--benchmark', type=str, required=True, choices=Benchmark.values)
        parser.add_argument('--complexity', type=int, required=True,
                            help='T/pi multiplier for shm, grid size N for heat')
        parser.add_argument('--depth', type=int, default=4)
        parser.add_argument('--width', type=int, default=64)
        parser.add_argument('--arch', type=str, default=Architecture.MLP, choices=Architecture.values)
        parser.add_argument('--first-layer-skip', action='store_true', help='ResNet: skip t into the first layer')
        parser.add_argument('--formulation', type=str, default=Formulation.UNIFORM, choices=Formulation.values)
        parser.add_argument('--lr', type=float, default=1e-3)
        parser.add_argument('--lambda-lr', type=float, default=None,
                            help='Ascent rate of the attention weights (default: --lr)')
        parser.add_argument('--iterations', type=int, default=DEFAULT_ITERATIONS)
        parser.add_argument('--training-points', type=int, default=None,
                            help='D (default: 256*c for shm, 1024 for heat)')
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--residual-reduction', type=str, default=ResidualReduction.MEAN,
                            choices=ResidualReduction.values)
        parser.add_argument('--scaling', type=str, default=IcScaling.INITIAL_CONDITION, choices=IcScaling.values)
        parser.add_argument('--trace-every', type=int, default=0,
                            help='Estimate loss Laplacians every N iterations (0 disables)')
        parser.add_argument('--trace-probes', type=int, default=8)
        parser.add_argument('--probes', type=int, default=None,
                            help='Probes for the final Laplacian estimates (0 skips them)')
        parser.add_argument('--out', type=str, default=None, help='Report JSON path')
        parser.add_argument('--checkpoint', type=str, default=None,
                            help='Parameter checkpoint path (default: next to the report)')
        parser.add_argument('--no-progress', action='store_true')

    def _build_config(self, options) -> TrainingConfig:
        benchmark, complexity = options['benchmark'], options['complexity']
        system = make_benchmark_system(benchmark, complexity, scaling=options['scaling'])
        D = options['training_points']
        if D is None:
            D = SweepSpec(benchmark=benchmark, complexity_values=(complexity,)).points_for(complexity)
        network = NetworkConfig(
            depth=options['depth'],
            width=options['width'],
            output_dim=system.dim,
            arch=options['arch'],
            first_layer_skip=options['first_layer_skip'],
        )
        return TrainingConfig(
            network=network,
            system=system,
            formulation=options['formulation'],
            learning_rate=options['lr'],
            iterations=options['iterations'],
            D=D,
            seed=options['seed'],
            residual_reduction=options['residual_reduction'],
            lambda_lr=options['lambda_lr'],
            trace_every=options['trace_every'],
            trace_probes=options['trace_probes'],
        )

    def handle(self, *args, **options):
        defaults = settings.PINN_DEFAULTS
        probes = defaults['probes'] if options['probes'] is None else options['probes']
        try:
            config = self._build_config(options)
        except PinnError as exc:
            raise CommandError(str(exc)) from exc

        run_id = RunSpec(
            benchmark=options['benchmark'], complexity=options['complexity'], seed=config.seed,
            depth=config.network.depth, width=config.network.width, learning_rate=config.learning_rate,
            arch=config.network.arch.value, formulation=config.formulation.value,
            iterations=config.iterations, D=config.D,
        ).run_id
        out_path = Path(options['out'] or default_output(f'{run_id}.json'))
        checkpoint_path = Path(options['checkpoint'] or out_path.with_suffix('.params'))

        self.stdout.write(f'Training {run_id} ({config.iterations} iterations, D={config.D})...')
        try:
            report = train(config, progress=not options['no_progress'])
            document = report.to_dict()
            if report.diverged:
                self.stdout.write(self.style.WARNING(f'Diverged: {report.divergence_message}'))
            else:
                errors = evaluate_errors(config, report.params, rtol=defaults['rtol'], atol=defaults['atol'])
                document['errors'] = {
                    'rel_error_eval': errors.rel_error_eval,
                    'rel_error_train': errors.rel_error_train,
                    'rel_error_ic': errors.rel_error_ic,
                }
                if probes > 0:
                    traces = laplacian_estimates(config.system, config, report.params,
                                                 n_probes=probes, seed=config.seed)
                    document['traces'] = {
                        str(component): {'mean': t.mean, 'stderr': t.stderr, 'probes': t.n_probes}
                        for component, t in traces.items()
                    }
        except PinnError as exc:
            raise CommandError(str(exc)) from exc

        try:
            out_path.parent.mkdir(parents=True, exist_ok=True)
            out_path.write_text(json.dumps(document, indent=2), encoding='utf-8')
            save_checkpoint(checkpoint_path, report.params, config.network,
                            meta={'training': config.to_dict(), 'run_id': run_id})
        except OSError as exc:
            raise CommandError(f'Cannot write outputs: {exc}') from exc

        if 'errors' in document:
            errors = document['errors']
            self.stdout.write(self.style.SUCCESS(
                f'RelError (eval) {errors["rel_error_eval"]:.4g}, RelError (t=0) {errors["rel_error_ic"]:.4g}'
            ))
        self.stdout.write(self.style.SUCCESS(f'Report: {out_path}'))
        self.stdout.write(self.style.SUCCESS(f'Checkpoint: {checkpoint_path}'))
