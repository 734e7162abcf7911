from django.core.management.base import CommandError

from cli import services
from cli.base import DefinitionCommand
from game_a.domain import SolutionKind


class Command(DefinitionCommand):
    help = 'Solve a definition for its Nash equilibrium in physical angles and optionally certify it.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--verify', action='store_true', help='Certify the equilibrium on a deviation grid')
        parser.add_argument('--epsilon', type=float, help='Certificate tolerance (default CERTIFICATE_EPSILON)')
        parser.add_argument('--grid', type=int, help='Deviation grid size (default CERTIFICATE_GRID)')

    def run(self, definition, **options):
        runner = services.DefinitionRunner(definition)
        report, solution = runner.solve(
            verify=options['verify'], epsilon=options.get('epsilon'), grid_n=options.get('grid')
        )
        self.stdout.write(services.format_report(report))
        self.stdout.write(services.format_solution(solution))
        if solution.kind is SolutionKind.DEGENERATE:
            raise CommandError(solution.note, returncode=services.EXIT_DEGENERATE)
        if solution.certificate is not None and not solution.certificate.passed:
            raise CommandError(
                f"certificate failed: max unilateral gain {solution.certificate.worst_gain:.3e}",
                returncode=services.EXIT_CERTIFICATE,
            )
