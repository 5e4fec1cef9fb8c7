from collections.abc import Mapping
from fractions import Fraction

from rest_framework import serializers

from .channel import DEFAULT_CFO_MEANS, DEFAULT_CFO_VARIANCE, CfoMixture, RicianChannelSpec, default_tap_profile
from .exceptions import ConfigurationError
from .link import STREAM_MIXTURE, derive_rng
from .models import SweepRecord, SweepRun
from .neuralnet import OPTIMIZERS, TrainConfig
from .noma import DEFAULT_POWER_COEFFS, NomaConfig
from .scenario import DEFAULT_SNR_GRID, ESTIMATORS, MODES, CnnArchitecture, ScenarioConfig
from .waveform import OfdmConfig, is_power_of_two


def _build(factory, attrs):
    try:
        return factory(**attrs)
    except ConfigurationError as exc:
        raise serializers.ValidationError(str(exc))


class FractionField(serializers.Field):
    """Accepts "1/8", 0.125 or 1/8 as a number; represented as "1/8"."""

    default_error_messages = {
        'invalid': 'A fraction such as "1/8" or a number is required.',
    }

    def to_internal_value(self, data):
        if isinstance(data, bool):
            self.fail('invalid')
        try:
            return Fraction(str(data)).limit_denominator(1 << 16)
        except (ValueError, ZeroDivisionError):
            self.fail('invalid')

    def to_representation(self, value):
        return str(value)


class OfdmConfigSerializer(serializers.Serializer):
    fft_size = serializers.IntegerField(default=256)
    num_subcarriers = serializers.IntegerField(default=128, min_value=2)
    cp_length = serializers.IntegerField(default=16, min_value=0)
    pilot_ratio = FractionField(default=Fraction(1, 8))
    preamble_half_len = serializers.IntegerField(default=160, min_value=1)
    num_symbols = serializers.IntegerField(default=10, min_value=0)
    modulation_order = serializers.IntegerField(default=4)
    carrier_frequency_hz = serializers.FloatField(default=1.2e9, min_value=0)

    def validate_fft_size(self, value):
        if not is_power_of_two(value):
            raise serializers.ValidationError("fft_size must be a power of two.")
        return value

    def validate_modulation_order(self, value):
        if value != 4:
            raise serializers.ValidationError("Only 4-QAM is supported.")
        return value

    def validate(self, attrs):
        return _build(OfdmConfig, attrs)


class RicianChannelSerializer(serializers.Serializer):
    k_factor = serializers.FloatField(default=10.0, min_value=0)
    num_taps = serializers.IntegerField(default=3, min_value=1)
    tap_power_profile = serializers.ListField(child=serializers.FloatField(min_value=0), required=False)

    def validate(self, attrs):
        attrs.setdefault('tap_power_profile', default_tap_profile(attrs['num_taps']))
        return _build(RicianChannelSpec, attrs)


class CfoMixtureSerializer(serializers.Serializer):
    """Mixture weights are optional; the scenario draws them when they are left out."""
    weights = serializers.ListField(child=serializers.FloatField(min_value=0), required=False)
    means = serializers.ListField(
        child=serializers.FloatField(min_value=-0.5, max_value=0.5),
        default=list(DEFAULT_CFO_MEANS),
        allow_empty=False,
    )
    variances = serializers.ListField(child=serializers.FloatField(), required=False)

    def validate_variances(self, value):
        if any(v <= 0 for v in value):
            raise serializers.ValidationError("Variances must be positive.")
        return value

    def validate(self, attrs):
        attrs.setdefault('variances', [DEFAULT_CFO_VARIANCE] * len(attrs['means']))
        if 'weights' in attrs:
            _build(CfoMixture, attrs)
        elif len(attrs['variances']) != len(attrs['means']):
            raise serializers.ValidationError("means and variances need one entry per component.")
        return attrs


class NomaConfigSerializer(serializers.Serializer):
    num_users = serializers.IntegerField(required=False, min_value=1)
    power_coeffs = serializers.ListField(
        child=serializers.FloatField(),
        default=list(DEFAULT_POWER_COEFFS),
        allow_empty=False,
    )
    total_power = serializers.FloatField(default=1.0)

    def validate_total_power(self, value):
        if value <= 0:
            raise serializers.ValidationError("total_power must be positive.")
        return value

    def validate(self, attrs):
        num_users = attrs.pop('num_users', None)
        if num_users is not None and num_users != len(attrs['power_coeffs']):
            raise serializers.ValidationError(
                f"num_users={num_users} but {len(attrs['power_coeffs'])} power coefficients were given."
            )
        return _build(NomaConfig, attrs)


class TrainConfigSerializer(serializers.Serializer):
    """Every field is optional; the scenario fills the rest from the matching preset."""
    max_epochs = serializers.IntegerField(required=False, min_value=0)
    mini_batch = serializers.IntegerField(required=False, min_value=1)
    learning_rate = serializers.FloatField(required=False, min_value=0)
    beta1 = serializers.FloatField(required=False, min_value=0, max_value=1)
    beta2 = serializers.FloatField(required=False, min_value=0, max_value=1)
    eps_bias = serializers.FloatField(required=False)
    validation_fraction = serializers.FloatField(required=False)
    num_samples = serializers.IntegerField(required=False, min_value=1)
    seed = serializers.IntegerField(required=False, min_value=0)
    optimizer = serializers.ChoiceField(choices=OPTIMIZERS, required=False)

    def validate(self, attrs):
        _build(TrainConfig, attrs)
        return attrs


class CnnArchitectureSerializer(serializers.Serializer):
    num_hidden = serializers.IntegerField(default=3, min_value=0)
    num_filters = serializers.IntegerField(default=64, min_value=1)
    kernel_size = serializers.IntegerField(default=9, min_value=1)
    residual = serializers.BooleanField(default=True)

    def validate_kernel_size(self, value):
        if value % 2 == 0:
            raise serializers.ValidationError("kernel_size must be odd.")
        return value

    def validate(self, attrs):
        return _build(CnnArchitecture, attrs)


class ScenarioConfigSerializer(serializers.Serializer):
    NESTED = ('ofdm', 'channel', 'cfo', 'noma', 'ce_train', 'cfo_train', 'architecture')

    ofdm = OfdmConfigSerializer()
    channel = RicianChannelSerializer()
    cfo = CfoMixtureSerializer()
    noma = NomaConfigSerializer()
    ce_train = TrainConfigSerializer()
    cfo_train = TrainConfigSerializer()
    architecture = CnnArchitectureSerializer()
    snr_grid = serializers.ListField(
        child=serializers.FloatField(),
        default=list(DEFAULT_SNR_GRID),
        allow_empty=False,
    )
    trials = serializers.IntegerField(default=100, min_value=1)
    seed = serializers.IntegerField(min_value=0)
    estimator = serializers.ChoiceField(choices=ESTIMATORS, default='classical')
    mode = serializers.ChoiceField(choices=MODES, default='oma')
    perfect_csi = serializers.BooleanField(default=False)
    noiseless = serializers.BooleanField(default=False)
    dl_shared_channel = serializers.BooleanField(default=False)
    ul_shared_channel = serializers.BooleanField(default=False)
    cfo_window = serializers.IntegerField(default=1100, min_value=1)
    train_snr_range = serializers.ListField(
        child=serializers.FloatField(),
        default=[5.0, 15.0],
        min_length=2,
        max_length=2,
    )
    ce_model_path = serializers.CharField(default='', allow_blank=True)
    cfo_model_path = serializers.CharField(default='', allow_blank=True)
    preamble_seed = serializers.IntegerField(default=0, min_value=0)
    workers = serializers.IntegerField(default=1, min_value=1)

    def to_internal_value(self, data):
        # Absent sections still go through their serializer so their defaults apply.
        if isinstance(data, Mapping):
            data = {**{name: {} for name in self.NESTED}, **data}
        return super().to_internal_value(data)

    def validate_train_snr_range(self, value):
        if value[0] > value[1]:
            raise serializers.ValidationError("train_snr_range must be [low, high] with low <= high.")
        return value

    def validate(self, attrs):
        mixture = attrs['cfo']
        if 'weights' not in mixture:
            rng = derive_rng(attrs['seed'], STREAM_MIXTURE)
            attrs['cfo'] = CfoMixture.with_random_weights(rng, mixture['means'], mixture['variances'])
        else:
            attrs['cfo'] = CfoMixture(**mixture)
        attrs['ce_train'] = _build(TrainConfig.ce_defaults, attrs['ce_train'])
        attrs['cfo_train'] = _build(TrainConfig.cfo_defaults, attrs['cfo_train'])
        return attrs

    def create(self, validated_data):
        try:
            return ScenarioConfig(**validated_data)
        except ConfigurationError as exc:
            raise serializers.ValidationError(str(exc))


class SweepRecordSerializer(serializers.ModelSerializer):

    class Meta:
        model = SweepRecord
        fields = ['snr_db', 'estimator', 'user', 'mse_cfo', 'mse_channel', 'ber', 'packet_loss']


class SweepRunListSerializer(serializers.ModelSerializer):
    record_count = serializers.IntegerField(source='num_records', read_only=True)
    created_at = serializers.DateTimeField(read_only=True)

    class Meta:
        model = SweepRun
        fields = ['id', 'mode', 'estimator', 'seed', 'scenario_digest', 'record_count', 'created_at']


class SweepRunDetailSerializer(serializers.ModelSerializer):
    records = SweepRecordSerializer(many=True, read_only=True)
    record_count = serializers.IntegerField(source='num_records', read_only=True)
    created_at = serializers.DateTimeField(read_only=True)

    class Meta:
        model = SweepRun
        fields = ['id', 'mode', 'estimator', 'seed', 'scenario_digest', 'config', 'csv_path',
                  'records', 'record_count', 'created_at']
