from cli import services
from cli.base import DefinitionCommand


class Command(DefinitionCommand):
    help = 'Evaluate both payoffs of a definition at one strategy profile (theta, phi).'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--theta', type=float, required=True)
        parser.add_argument('--phi', type=float, required=True)

    def run(self, definition, **options):
        f1, f2 = services.DefinitionRunner(definition).evaluate(options['theta'], options['phi'])
        self.stdout.write(f"f1 = {f1:.12g}")
        self.stdout.write(f"f2 = {f2:.12g}")
