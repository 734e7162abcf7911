from cli import services
from cli.base import DefinitionCommand


class Command(DefinitionCommand):
    help = 'Write payoffs on an n x n grid of the strategy domain as CSV (theta, phi, f1, f2).'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--n', type=int, help='Grid points per axis (default SWEEP_N)')
        parser.add_argument('--out', help='Output CSV path (default stdout)')

    def run(self, definition, **options):
        frame = services.DefinitionRunner(definition).sweep(options.get('n'))
        if options.get('out'):
            services.sweep_csv(frame, options['out'])
            self.stdout.write(f"wrote {len(frame)} rows to {options['out']}")
        else:
            self.stdout.write(services.sweep_csv(frame), ending='')
