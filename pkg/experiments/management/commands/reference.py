"""
Management command to write a reference trajectory for one benchmark system.
"""
import numpy as np
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from experiments.config import SweepSpec, default_output
from pinns.exceptions import PinnError
from pinns.solvers import reference_solution
from pinns.systems import Benchmark, IcScaling, make_benchmark_system
from pinns.training import make_collocation


class Command(BaseCommand):
    help = 'Solve a benchmark system with the reference solver and write the trajectory as CSV'

    def add_arguments(self, parser):
        parser.add_argument('--benchmark', type=str, required=True, choices=Benchmark.values)
        parser.add_argument(
            '--complexity',
            type=int,
            required=True,
            help='T/pi multiplier for shm, grid size N for heat',
        )
        parser.add_argument('--out', type=str, default=None, help='Trajectory CSV path')
        parser.add_argument(
            '--points',
            type=int,
            default=None,
            help='Evenly spaced output times on [0, T] (default: t = 0 plus the training and evaluation points)',
        )
        parser.add_argument('--method', type=str, default='auto',
                            choices=['auto', 'rk45', 'spectral', 'closed_form'])
        parser.add_argument('--scaling', type=str, default=IcScaling.INITIAL_CONDITION, choices=IcScaling.values)

    def handle(self, *args, **options):
        defaults = settings.PINN_DEFAULTS
        benchmark, complexity = options['benchmark'], options['complexity']
        try:
            system = make_benchmark_system(benchmark, complexity, scaling=options['scaling'])
            if options['points']:
                if options['points'] < 2:
                    raise CommandError('--points must be at least 2')
                times = np.linspace(0.0, system.horizon, options['points'])
            else:
                D = SweepSpec(benchmark=benchmark, complexity_values=(complexity,)).points_for(complexity)
                collocation = make_collocation(system.horizon, D)
                times = np.sort(np.concatenate([[0.0], collocation.train_points, collocation.eval_points]))
            trajectory = reference_solution(system, times, rtol=defaults['rtol'], atol=defaults['atol'],
                                            method=options['method'])
        except PinnError as exc:
            raise CommandError(str(exc)) from exc

        out_path = options['out'] or default_output(f'reference-{benchmark}-{complexity}.csv')
        try:
            path = trajectory.to_csv(out_path)
        except OSError as exc:
            raise CommandError(f'Cannot write trajectory: {exc}') from exc

        self.stdout.write(self.style.SUCCESS(
            f'{len(trajectory.times)} states of {system.dim}-dimensional {benchmark} system '
            f'({trajectory.method}) written to {path}'
        ))
        if trajectory.method == 'rk45':
            self.stdout.write(f'  steps: {trajectory.steps} accepted, {trajectory.rejected} rejected, '
                              f'{trajectory.evaluations} evaluations')
