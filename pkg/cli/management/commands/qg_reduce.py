from cli import services
from cli.base import DefinitionCommand


class Command(DefinitionCommand):
    help = 'Reduce a definition to GAME A and print coefficients, phases and formula residuals.'

    def run(self, definition, **options):
        report = services.DefinitionRunner(definition).reduce()
        self.stdout.write(services.format_report(report))
        flagged = report.flagged_residuals()
        if flagged:
            names = ', '.join(f"{r.name} (player {r.player}, {r.source})" for r in flagged)
            self.stdout.write(self.style.WARNING(f"formula residuals above tolerance: {names}"))
