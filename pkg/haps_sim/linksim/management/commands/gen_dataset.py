from ...cnn_estimators import CE_KIND, CFO_KIND, generate_ce_dataset, generate_cfo_dataset
from ...storage import save_dataset
from ..base import LinkSimCommand


class Command(LinkSimCommand):
    help = 'Synthesize a CE-CNN or CFO-CNN training dataset'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--kind', choices=[CE_KIND, CFO_KIND], default=CE_KIND)
        parser.add_argument('--samples', type=int, help='Number of samples (default: the training config)')
        parser.add_argument('--window', type=int, help='CFO window length W (default: the scenario)')

    def run(self, **options):
        scenario = self.load_scenario(options)
        kind = options['kind']
        out = self.output_path(options, f'{kind}_dataset_{scenario.seed}.zip')
        if kind == CE_KIND:
            count = options['samples'] or scenario.ce_train.num_samples
            dataset = generate_ce_dataset(count, scenario.train_snr_range, scenario,
                                          scenario.seed, scenario.workers)
        else:
            count = options['samples'] or scenario.cfo_train.num_samples
            window = options['window'] or scenario.cfo_window
            dataset = generate_cfo_dataset(count, window, scenario, scenario.seed,
                                           scenario.train_snr_range, scenario.workers)
        save_dataset(dataset, out)
        self.stdout.write(self.style.SUCCESS(
            f"Wrote {len(dataset)} {kind} samples of shape {dataset.sample_shape} to {out}"
        ))
