import logging
from contextlib import ExitStack

from django.core.management.base import BaseCommand, CommandError

from qmatrix import conf
from qmatrix.exceptions import QuantumGameError

from . import services

logger = logging.getLogger(__name__)


class DefinitionCommand(BaseCommand):
    """Base for commands that read one game definition file.

    Toolkit errors become CommandError with the documented exit code.
    """

    requires_system_checks = []
    path_required = True

    def add_arguments(self, parser):
        parser.add_argument(
            'definition',
            nargs=None if self.path_required else '?',
            help='Path to a YAML or JSON game definition',
        )
        parser.add_argument('--seed', type=int, help='Seed for sampled checks (overrides the file)')

    def handle(self, *args, **options):
        try:
            definition = services.load_definition(options['definition']) if options.get('definition') else None
            with ExitStack() as stack:
                if definition is not None:
                    stack.enter_context(conf.overrides(self._scoped_settings(definition, options)))
                elif options.get('seed') is not None:
                    stack.enter_context(conf.overrides({'SEED': options['seed']}))
                run_options = {key: value for key, value in options.items() if key != 'definition'}
                return self.run(definition, **run_options)
        except QuantumGameError as exc:
            code = services.exit_code_for(exc)
            logger.error(f"{self.__module__.rsplit('.', 1)[-1]} failed with exit code {code}: {exc}")
            raise CommandError(str(exc), returncode=code)

    @staticmethod
    def _scoped_settings(definition, options):
        scoped = dict(definition.tolerances)
        seed = options.get('seed') if options.get('seed') is not None else definition.seed
        if seed is not None:
            scoped['SEED'] = seed
        return scoped

    def run(self, definition, **options):
        raise NotImplementedError('subclasses of DefinitionCommand must provide a run() method')
