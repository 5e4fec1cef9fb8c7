import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from ..channel import (
    MAX_CFO,
    CfoMixture,
    ChannelRealization,
    RicianChannelSpec,
    add_awgn,
    apply_cfo,
    apply_channel,
    cfo_attenuation,
    default_tap_profile,
    draw_cfo,
    draw_cfo_sequence,
    draw_channel,
    noise_power,
)
from ..exceptions import ConfigurationError
from ..waveform import OfdmConfig, dft, ofdm_demodulate, ofdm_modulate


class RicianChannelTest(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_default_spec(self):
        """Test the default channel is K=10 with the three-tap profile."""
        spec = RicianChannelSpec()
        self.assertEqual(spec.k_factor, 10.0)
        self.assertEqual(spec.tap_power_profile, (0.8, 0.15, 0.05))
        self.assertEqual(spec.memory, 2)

    def test_invalid_specs(self):
        """Test negative K, empty channels and bad profiles are rejected."""
        for bad in (
            dict(k_factor=-1.0),
            dict(num_taps=0, tap_power_profile=()),
            dict(num_taps=2),
            dict(num_taps=2, tap_power_profile=(0.5, 0.6)),
        ):
            with self.subTest(bad=bad):
                with self.assertRaises(ConfigurationError):
                    RicianChannelSpec(**bad)

    def test_decaying_profile_for_other_tap_counts(self):
        """Test non-default tap counts get a normalised decaying profile."""
        profile = default_tap_profile(4)
        self.assertEqual(len(profile), 4)
        self.assertAlmostEqual(sum(profile), 1.0)
        self.assertTrue(all(a > b for a, b in zip(profile, profile[1:])))

    def test_pure_line_of_sight(self):
        """Test K=inf leaves only the deterministic LOS part on tap 0."""
        spec = RicianChannelSpec(k_factor=math.inf)
        ch = draw_channel(spec, self.rng, 256)
        self.assertAlmostEqual(ch.taps[0], math.sqrt(0.8))

    def test_average_power_is_one(self):
        """Test E[Σ|h_l|²] = 1 over many draws."""
        spec = RicianChannelSpec()
        power = np.mean([np.sum(np.abs(draw_channel(spec, self.rng, 64).taps) ** 2) for _ in range(4000)])
        self.assertAlmostEqual(power, 1.0, delta=0.05)

    def test_cfr_is_dft_of_taps(self):
        """Test the response is the N-point transform of the zero-padded taps."""
        ch = ChannelRealization.from_taps([1.0, 0.5j], 8)
        padded = np.zeros(8, dtype=complex)
        padded[:2] = [1.0, 0.5j]
        assert_allclose(ch.cfr, dft(padded))

    def test_flat_channel(self):
        """Test a flat channel has a constant response."""
        assert_allclose(ChannelRealization.flat(16, 2.0).cfr, np.full(16, 2.0))


class ApplyChannelTest(SimpleTestCase):

    def test_linear_convolution_truncated(self):
        """Test the output is the convolution cut to the input length."""
        x = np.arange(6, dtype=complex)
        ch = ChannelRealization.from_taps([1.0, 0.5], 8)
        out = apply_channel(x, ch)
        assert_allclose(out.samples, np.convolve(x, [1.0, 0.5])[:6])
        self.assertFalse(out.cp_too_short)

    def test_one_sample_delay(self):
        """Test h=[0,1,0] turns into the phase ramp e^{-j2πk/N} after the prefix is removed."""
        cfg = OfdmConfig(fft_size=64, num_subcarriers=32, cp_length=8)
        grid = np.random.default_rng(1).standard_normal(64) + 1j
        symbol = ofdm_modulate(grid, cfg)
        out = apply_channel(symbol, ChannelRealization.from_taps([0.0, 1.0, 0.0], 64), cfg.cp_length)
        k = np.arange(64)
        assert_allclose(ofdm_demodulate(out.samples, cfg), np.exp(-2j * np.pi * k / 64) * grid, atol=1e-9)

    def test_short_cyclic_prefix_flagged(self):
        """Test a prefix shorter than the channel memory is flagged and logged."""
        ch = ChannelRealization.from_taps([1.0, 0.2, 0.1], 8)
        with self.assertLogs('linksim.channel', level='WARNING'):
            out = apply_channel(np.ones(8), ch, cp_length=1)
        self.assertTrue(out.cp_too_short)


class CfoTest(SimpleTestCase):

    def test_attenuation_formula(self):
        """Test the closed form at a few offsets."""
        self.assertAlmostEqual(cfo_attenuation(0.0, 256), 1.0)
        eps = 0.3
        expected = math.sin(math.pi * eps) / (256 * math.sin(math.pi * eps / 256))
        self.assertAlmostEqual(cfo_attenuation(eps, 256), expected, places=12)
        self.assertAlmostEqual(cfo_attenuation(0.5, 256), 0.63662, places=5)
        self.assertAlmostEqual(cfo_attenuation(-0.3, 256), cfo_attenuation(0.3, 256), places=15)

    def test_simulated_attenuation_matches_formula(self):
        """Test the desired subcarrier amplitude under CFO on a noiseless flat link."""
        cfg = OfdmConfig(fft_size=256, num_subcarriers=128, cp_length=0)
        tone = np.zeros(256, dtype=complex)
        tone[5] = 1.0
        body = dft(tone, inverse=True)
        for eps in (0.1, 0.3, 0.5):
            with self.subTest(eps=eps):
                received = dft(apply_cfo(body, eps, cfg))
                self.assertAlmostEqual(abs(received[5]), cfo_attenuation(eps, 256), delta=1e-6)

    def test_rotation_uses_global_index(self):
        """Test a start index continues the phase ramp of earlier samples."""
        cfg = OfdmConfig()
        x = np.ones(20, dtype=complex)
        whole = apply_cfo(x, 0.2, cfg)
        assert_allclose(apply_cfo(x[12:], 0.2, cfg, start_index=12), whole[12:])

    def test_zero_offset_returns_copy(self):
        """Test ε=0 leaves the samples untouched."""
        x = np.arange(4, dtype=complex)
        out = apply_cfo(x, 0.0, OfdmConfig())
        assert_array_equal(out, x)
        self.assertIsNot(out, x)


class CfoMixtureTest(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(5)

    def test_weights_must_sum_to_one(self):
        """Test a mixture whose weights do not sum to 1 is rejected."""
        with self.assertRaises(ConfigurationError):
            CfoMixture(weights=(0.5, 0.2, 0.2))

    def test_random_weights(self):
        """Test Dirichlet weights form a valid three-component mixture."""
        mix = CfoMixture.with_random_weights(self.rng)
        self.assertEqual(mix.components, 3)
        self.assertAlmostEqual(sum(mix.weights), 1.0)

    def test_draws_stay_in_range(self):
        """Test every draw lies within half a subcarrier."""
        mix = CfoMixture(weights=(0.2, 0.3, 0.5), variances=(0.2, 0.2, 0.2))
        draws = draw_cfo_sequence(mix, self.rng, 5000)
        self.assertTrue(np.all(np.abs(draws) <= MAX_CFO))
        self.assertLessEqual(abs(draw_cfo(mix, self.rng)), MAX_CFO)

    def test_sequence_mean(self):
        """Test the empirical mean approaches Σ w_k μ_k."""
        mix = CfoMixture(weights=(0.2, 0.3, 0.5))
        draws = draw_cfo_sequence(mix, self.rng, 20000)
        expected = 0.2 * -0.2 + 0.3 * 0.05 + 0.5 * 0.3
        self.assertAlmostEqual(float(np.mean(draws)), expected, delta=0.01)


class NoiseTest(SimpleTestCase):

    def test_noise_power(self):
        """Test N₀ = P / 10^(SNR/10)."""
        self.assertAlmostEqual(noise_power(10.0, 2.0), 0.2)
        self.assertEqual(noise_power(math.inf, 1.0), 0.0)
        with self.assertRaises(ConfigurationError):
            noise_power(10.0, 0.0)

    def test_empirical_noise_power(self):
        """Test the added noise has the requested power."""
        rng = np.random.default_rng(9)
        noise = add_awgn(np.zeros(200000), 10.0, 1.0, rng)
        self.assertAlmostEqual(float(np.mean(np.abs(noise) ** 2)), 0.1, delta=0.003)

    def test_infinite_snr_is_noiseless(self):
        """Test SNR=inf adds nothing."""
        x = np.ones(8, dtype=complex)
        assert_array_equal(add_awgn(x, math.inf, 1.0, np.random.default_rng(0)), x)
