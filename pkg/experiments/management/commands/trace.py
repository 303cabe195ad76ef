"""
Management command to estimate normalized loss Laplacians at a saved checkpoint.
"""
import json

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from pinns.diagnostics import laplacian_estimates
from pinns.exceptions import PinnError
from pinns.networks import load_checkpoint
from pinns.training import TrainingConfig


class Command(BaseCommand):
    help = 'Hutchinson estimates of the residual and initial-condition loss Laplacians of a checkpoint'

    def add_arguments(self, parser):
        parser.add_argument('--checkpoint', type=str, required=True, help='Checkpoint written by `train`')
        parser.add_argument('--probes', type=int, default=None, help='Rademacher probes per component')
        parser.add_argument('--seed', type=int, default=0, help='Probe stream seed')
        parser.add_argument('--workers', type=int, default=1, help='Threads evaluating probes')
        parser.add_argument('--json', action='store_true', help='Print the estimates as JSON')

    def handle(self, *args, **options):
        probes = options['probes'] if options['probes'] is not None else settings.PINN_DEFAULTS['probes']
        if probes < 1:
            raise CommandError('--probes must be at least 1')
        try:
            network, params, meta = load_checkpoint(options['checkpoint'])
        except OSError as exc:
            raise CommandError(f'Cannot read checkpoint: {exc}') from exc
        except PinnError as exc:
            raise CommandError(str(exc)) from exc

        if 'training' not in meta:
            raise CommandError('Checkpoint carries no training descriptor; re-save it with `train`')
        try:
            config = TrainingConfig.from_dict(meta['training'])
            if config.network != network:
                raise CommandError('Checkpoint network header disagrees with its training descriptor')
            estimates = laplacian_estimates(config.system, config, params, n_probes=probes,
                                            seed=options['seed'], workers=options['workers'])
        except PinnError as exc:
            raise CommandError(str(exc)) from exc

        if options['json']:
            payload = {
                str(component): {'mean': e.mean, 'stderr': e.stderr, 'probes': e.n_probes}
                for component, e in estimates.items()
            }
            self.stdout.write(json.dumps(payload, indent=2))
            return

        self.stdout.write(self.style.SUCCESS(f'Laplacian estimates ({probes} probes, seed {options["seed"]}):'))
        for component, estimate in estimates.items():
            self.stdout.write(f'  {str(component):<18} {estimate.mean:.6g} +/- {estimate.stderr:.2g}')
