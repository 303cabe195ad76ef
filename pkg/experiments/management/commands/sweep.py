"""
Management command to run a benchmark sweep described by a config document.
"""
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from experiments.config import default_output, parse_config
from experiments.harness import run_sweep
from experiments.models import SweepRecord
from pinns.exceptions import PinnError


class Command(BaseCommand):
    help = 'Train every grid configuration for each complexity value and seed, writing one CSV row per run'

    def add_arguments(self, parser):
        parser.add_argument(
            '--config',
            type=str,
            required=True,
            help='Path to the sweep config (key = value document)',
        )
        parser.add_argument(
            '--workers',
            type=int,
            default=1,
            help='Number of worker processes',
        )
        parser.add_argument(
            '--out',
            type=str,
            default=None,
            help='Result CSV path (default: config "out" key, else PINN_OUTPUT_DIR/<config name>.csv)',
        )
        parser.add_argument(
            '--record',
            action='store_true',
            help='Also store the sweep and its rows in the database',
        )
        parser.add_argument(
            '--no-progress',
            action='store_true',
            help='Hide the progress bar',
        )

    def handle(self, *args, **options):
        config_path = Path(options['config'])
        if options['workers'] < 1:
            raise CommandError('--workers must be at least 1')
        try:
            text = config_path.read_text(encoding='utf-8')
        except OSError as exc:
            raise CommandError(f'Cannot read config {config_path}: {exc}') from exc

        try:
            spec = parse_config(text)
        except PinnError as exc:
            raise CommandError(f'{config_path}: {exc}') from exc

        out_path = options['out'] or spec.output_path or default_output(f'{config_path.stem}.csv')
        runs = len(spec.complexity_values) * len(spec.seeds) * spec.grid_size
        self.stdout.write(f'Running {runs} {spec.benchmark} runs on {options["workers"]} worker(s)...')

        try:
            result = run_sweep(spec, workers=options['workers'], out_path=out_path,
                               progress=not options['no_progress'])
        except OSError as exc:
            raise CommandError(f'Cannot write results: {exc}') from exc

        self.stdout.write(self.style.SUCCESS(f'Wrote {len(result.rows)} rows to {result.path}'))
        self.stdout.write(f'Timings: {result.timings_path}')
        if result.diverged:
            self.stdout.write(self.style.WARNING(f'{result.diverged} run(s) diverged; see the "message" column'))

        if options['record']:
            record = SweepRecord.from_sweep(spec, result, config_text=text, workers=options['workers'])
            self.stdout.write(self.style.SUCCESS(f'Recorded sweep #{record.pk}'))
