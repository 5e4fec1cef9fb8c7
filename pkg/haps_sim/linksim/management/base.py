import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from ..exceptions import LinkSimError
from ..scenario import load_scenario

logger = logging.getLogger(__name__)


class LinkSimCommand(BaseCommand):
    """
    Base for the simulator commands: shared ``--config/--seed/--out`` options
    and translation of simulator errors into ``CommandError``.
    """

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Scenario JSON file; defaults apply to every missing field')
        parser.add_argument('--seed', type=int, help='Seed overriding the scenario and LINKSIM_SEED')
        parser.add_argument('--out', help='Output file')

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except LinkSimError as exc:
            raise CommandError(str(exc)) from exc

    def run(self, **options):
        raise NotImplementedError

    def load_scenario(self, options, **overrides):
        return load_scenario(options.get('config'), seed=options.get('seed'), **overrides)

    def output_path(self, options, default_name):
        if options.get('out'):
            return Path(options['out'])
        return Path(settings.LINKSIM['OUTPUT_DIR']) / default_name
