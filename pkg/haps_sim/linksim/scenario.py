"""
Scenario configuration: everything one dataset, training or sweep run needs.

Scenario files are JSON documents validated by ``ScenarioConfigSerializer``;
any field left out takes the system-parameter default, so ``{}`` is a
complete scenario.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from django.conf import settings

from .channel import CfoMixture, RicianChannelSpec
from .exceptions import ConfigurationError
from .link import FrameSpec
from .neuralnet import TrainConfig
from .noma import NomaConfig
from .waveform import OfdmConfig

logger = logging.getLogger(__name__)

ESTIMATORS = ('classical', 'cnn')
MODES = ('oma', 'noma-dl', 'noma-ul')
DEFAULT_SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
DEFAULT_SEED = 2023


@dataclass(frozen=True)
class CnnArchitecture:
    num_hidden: int = 3
    num_filters: int = 64
    kernel_size: int = 9
    residual: bool = True

    def __post_init__(self):
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigurationError(f"kernel_size must be odd, got {self.kernel_size}.")
        if self.num_hidden < 0 or self.num_filters < 1:
            raise ConfigurationError("num_hidden must be >= 0 and num_filters >= 1.")


@dataclass(frozen=True)
class ScenarioConfig:
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    channel: RicianChannelSpec = field(default_factory=RicianChannelSpec)
    cfo: CfoMixture = field(default_factory=lambda: CfoMixture(weights=(0.4, 0.3, 0.3)))
    noma: NomaConfig = field(default_factory=NomaConfig)
    snr_grid: tuple = DEFAULT_SNR_GRID
    trials: int = 100
    seed: int = DEFAULT_SEED
    estimator: str = 'classical'
    mode: str = 'oma'
    perfect_csi: bool = False
    noiseless: bool = False
    dl_shared_channel: bool = False
    ul_shared_channel: bool = False
    ce_train: TrainConfig = field(default_factory=TrainConfig.ce_defaults)
    cfo_train: TrainConfig = field(default_factory=TrainConfig.cfo_defaults)
    architecture: CnnArchitecture = field(default_factory=CnnArchitecture)
    cfo_window: int = 1100
    train_snr_range: tuple = (5.0, 15.0)
    ce_model_path: str = ''
    cfo_model_path: str = ''
    preamble_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'snr_grid', tuple(float(s) for s in self.snr_grid))
        object.__setattr__(self, 'train_snr_range', tuple(float(s) for s in self.train_snr_range))
        if not self.snr_grid:
            raise ConfigurationError("snr_grid cannot be empty.")
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1.")
        if self.estimator not in ESTIMATORS:
            raise ConfigurationError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}.")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}.")
        if self.cfo_window < 1 or self.workers < 1:
            raise ConfigurationError("cfo_window and workers must be at least 1.")
        low, high = self.train_snr_range
        if len(self.train_snr_range) != 2 or low > high:
            raise ConfigurationError("train_snr_range must be [low, high] with low <= high.")

    @property
    def num_users(self):
        return 1 if self.mode == 'oma' else self.noma.num_users

    def frame_spec(self):
        return FrameSpec.from_config(self.ofdm, self.preamble_seed)

    def echo(self):
        """JSON-compatible dict of every setting; feeding it back to ``load_scenario`` rebuilds this scenario."""
        return _plain({
            'ofdm': vars(self.ofdm),
            'channel': vars(self.channel),
            'cfo': vars(self.cfo),
            'noma': {**vars(self.noma), 'num_users': self.noma.num_users},
            'snr_grid': self.snr_grid,
            'trials': self.trials,
            'seed': self.seed,
            'estimator': self.estimator,
            'mode': self.mode,
            'perfect_csi': self.perfect_csi,
            'noiseless': self.noiseless,
            'dl_shared_channel': self.dl_shared_channel,
            'ul_shared_channel': self.ul_shared_channel,
            'ce_train': vars(self.ce_train),
            'cfo_train': vars(self.cfo_train),
            'architecture': vars(self.architecture),
            'cfo_window': self.cfo_window,
            'train_snr_range': self.train_snr_range,
            'ce_model_path': self.ce_model_path,
            'cfo_model_path': self.cfo_model_path,
            'preamble_seed': self.preamble_seed,
            'workers': self.workers,
        })

    def digest(self):
        canonical = json.dumps(self.echo(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    if isinstance(value, Fraction):
        return str(value)
    return value


def linksim_setting(name, default=None):
    return getattr(settings, 'LINKSIM', {}).get(name, default)


def read_scenario_file(path):
    path = Path(path)
    try:
        with path.open(encoding='utf-8') as handle:
            data = json.load(handle)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"Scenario file {path} does not exist.") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"Scenario file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"Scenario file {path} must hold a JSON object.")
    return data


def load_scenario(source=None, **overrides):
    """
    Validated ``ScenarioConfig`` from a JSON file path, a dict or nothing.

    Keyword overrides whose value is ``None`` are ignored, so CLI options can
    be passed through unconditionally. The seed falls back to the
    ``LINKSIM['SEED']`` setting.
    """
    from .serializers import ScenarioConfigSerializer

    if source is None:
        data = {}
    elif isinstance(source, dict):
        data = dict(source)
    else:
        data = read_scenario_file(source)
    data.update({k: v for k, v in overrides.items() if v is not None})
    data.setdefault('seed', linksim_setting('SEED', DEFAULT_SEED))
    data.setdefault('workers', linksim_setting('WORKERS', 1))

    serializer = ScenarioConfigSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigurationError(f"Invalid scenario: {serializer.errors}", errors=serializer.errors)
    scenario = serializer.save()
    logger.debug("Loaded scenario %s", scenario.digest()[:12])
    return scenario
