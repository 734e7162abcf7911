from django.core.management.base import CommandError

from cli import services
from cli.base import DefinitionCommand


class Command(DefinitionCommand):
    help = 'Run the seeded invariant suites, or the checks for one definition file.'
    path_required = False

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--suite',
            action='append',
            dest='suites',
            help='Invariant suite to run (repeatable; default all)',
        )

    def run(self, definition, **options):
        runner = services.InvariantSuiteRunner()
        if definition is not None:
            results = [runner.check_definition(definition)]
        else:
            results = runner.run(options.get('suites'))
        failed = 0
        for result in results:
            passed = result['total'] - result['failed']
            line = f"{result['suite']}: {passed}/{result['total']} passed"
            if result['failed']:
                self.stdout.write(self.style.ERROR(line))
                for issue in result['issues'][:10]:
                    self.stdout.write(f"  - {issue}")
            else:
                self.stdout.write(self.style.SUCCESS(line))
            failed += result['failed']
        if failed:
            raise CommandError(f"{failed} invariant check(s) failed", returncode=services.EXIT_CERTIFICATE)
