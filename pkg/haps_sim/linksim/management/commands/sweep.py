from django.conf import settings

from ...harness import estimator_label, run_sweep
from ...models import SweepRun
from ...scenario import ESTIMATORS, MODES
from ...storage import write_csv
from ..base import LinkSimCommand


class Command(LinkSimCommand):
    help = 'Run a Monte Carlo SNR sweep and write its metric records as CSV'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--estimator', choices=ESTIMATORS)
        parser.add_argument('--mode', choices=MODES)
        parser.add_argument('--ce-model', dest='ce_model_path', help='CE-CNN model file')
        parser.add_argument('--cfo-model', dest='cfo_model_path', help='CFO-CNN model file')
        parser.add_argument('--trials', type=int, help='Frames per SNR point')
        parser.add_argument('--no-archive', action='store_true', help='Do not store the run in the database')

    def run(self, **options):
        scenario = self.load_scenario(
            options,
            estimator=options['estimator'],
            mode=options['mode'],
            ce_model_path=options['ce_model_path'],
            cfo_model_path=options['cfo_model_path'],
            trials=options['trials'],
        )
        label = estimator_label(scenario)
        out = self.output_path(options, f'sweep_{scenario.mode}_{label}_{scenario.seed}.csv')

        records = run_sweep(scenario)
        write_csv(records, out, scenario.echo())
        self.stdout.write(self.style.SUCCESS(f"Wrote {len(records)} records to {out}"))

        if settings.LINKSIM['ARCHIVE_RUNS'] and not options['no_archive']:
            run = SweepRun.objects.archive(records, scenario, out)
            self.stdout.write(f"Archived as run {run.id}")
