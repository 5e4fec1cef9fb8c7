from ...cnn_estimators import CE_KIND, CFO_KIND
from ...exceptions import ConfigurationError
from ...link import STREAM_TRAINING, derive_rng
from ...neuralnet import CnnModel, TensorDataset, train
from ...storage import load_dataset, save_model
from ..base import LinkSimCommand


class Command(LinkSimCommand):
    help = 'Train a CE-CNN or CFO-CNN model on a generated dataset'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--dataset', required=True, help='Dataset file written by gen_dataset')
        parser.add_argument('--kind', choices=[CE_KIND, CFO_KIND],
                            help='Training preset to use (default: the dataset kind)')

    def run(self, **options):
        scenario = self.load_scenario(options)
        dataset = load_dataset(options['dataset'])
        kind = options['kind'] or dataset.kind
        if kind != dataset.kind:
            raise ConfigurationError(f"--kind {kind} does not match the {dataset.kind} dataset.")
        train_cfg = scenario.ce_train if kind == CE_KIND else scenario.cfo_train

        arch = scenario.architecture
        rng = derive_rng(scenario.seed, STREAM_TRAINING, 0 if kind == CE_KIND else 1, train_cfg.seed)
        model = CnnModel.build(dataset.sample_shape, rng, arch.num_hidden, arch.num_filters,
                               arch.kernel_size, arch.residual)
        result = train(model, TensorDataset(dataset.inputs, dataset.targets), train_cfg, rng)

        out = self.output_path(options, f'{kind}_model_{scenario.seed}.zip')
        save_model(result.model, out, metadata={
            'kind': kind,
            'dataset_seed': dataset.seed,
            'scenario_digest': dataset.scenario_digest,
            'train_config': vars(train_cfg),
            'history': [h._asdict() for h in result.history],
        })
        final = result.history[-1]
        self.stdout.write(self.style.SUCCESS(
            f"Trained {kind} model for {final.epoch} epochs "
            f"(train loss {final.train_loss:.6g}, validation loss {final.validation_loss:.6g}); wrote {out}"
        ))
