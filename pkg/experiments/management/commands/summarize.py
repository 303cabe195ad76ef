from django.core.management.base import BaseCommand, CommandError

from experiments.harness import format_summary, summarize, write_summary
from pinns.exceptions import PinnError


class Command(BaseCommand):
    help = 'Median/min relative error and best configuration per complexity value of a sweep CSV'

    def add_arguments(self, parser):
        parser.add_argument('--in', dest='input_path', type=str, required=True, help='Sweep result CSV')
        parser.add_argument('--out', type=str, default=None, help='Also write the summary as CSV')

    def handle(self, *args, **options):
        try:
            summary = summarize(options['input_path'])
        except (PinnError, OSError, KeyError) as exc:
            raise CommandError(f'Cannot summarize {options["input_path"]}: {exc}') from exc

        self.stdout.write(format_summary(summary))
        if options['out']:
            try:
                path = write_summary(options['out'], summary)
            except OSError as exc:
                raise CommandError(f'Cannot write summary: {exc}') from exc
            self.stdout.write(self.style.SUCCESS(f'Summary written to {path}'))
