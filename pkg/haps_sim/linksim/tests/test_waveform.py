from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from ..exceptions import ConfigurationError, DimensionError
from ..waveform import (
    FrameLayout,
    OfdmConfig,
    build_preamble,
    dft,
    extract_pilots,
    hard_decision,
    insert_pilots,
    ofdm_demodulate,
    ofdm_modulate,
    qam_demodulate,
    qam_modulate,
)
from .fixtures import small_ofdm


class OfdmConfigTest(SimpleTestCase):

    def test_default_system_parameters(self):
        """Test the defaults describe the 256/128/16 link with 16 pilots."""
        cfg = OfdmConfig()
        self.assertEqual(cfg.symbol_length, 272)
        self.assertEqual(cfg.num_pilots, 16)
        self.assertEqual(cfg.num_data_subcarriers, 112)
        self.assertEqual(cfg.preamble_section_length, 16 + 320)
        self.assertEqual(cfg.occupancy, 2.0)
        self.assertEqual(cfg.bits_per_ofdm_symbol, 224)

    def test_pilot_ratio_accepts_decimal(self):
        """Test a decimal pilot ratio is normalised to a fraction."""
        self.assertEqual(OfdmConfig(pilot_ratio=0.125).pilot_ratio, Fraction(1, 8))

    def test_invalid_configurations(self):
        """Test broken waveform parameters are rejected."""
        for bad in (
            dict(fft_size=100),
            dict(num_subcarriers=127),
            dict(num_subcarriers=256),
            dict(cp_length=256),
            dict(pilot_ratio=Fraction(1, 3)),
            dict(modulation_order=16),
            dict(num_symbols=-1),
        ):
            with self.subTest(bad=bad):
                with self.assertRaises(ConfigurationError):
                    OfdmConfig(**bad)

    def test_occupied_band_bounds(self):
        """Test the widest band is N-2 even bins, leaving DC and Nyquist empty."""
        cfg = OfdmConfig(fft_size=64, num_subcarriers=62, pilot_ratio=Fraction(1, 2))
        self.assertEqual(cfg.num_subcarriers, 62)
        for kappa in (63, 64, 61):
            with self.subTest(num_subcarriers=kappa):
                with self.assertRaises(ConfigurationError):
                    OfdmConfig(fft_size=64, num_subcarriers=kappa, pilot_ratio=Fraction(1, 1))


class QamTest(SimpleTestCase):

    def test_gray_mapping(self):
        """Test the four bit pairs land on the Gray-coded quadrants."""
        symbols = qam_modulate([0, 0, 0, 1, 1, 1, 1, 0])
        expected = np.array([1 + 1j, 1 - 1j, -1 - 1j, -1 + 1j]) / np.sqrt(2)
        assert_allclose(symbols, expected)

    def test_unit_average_power(self):
        """Test every constellation point has unit energy."""
        symbols = qam_modulate([0, 0, 0, 1, 1, 1, 1, 0])
        assert_allclose(np.abs(symbols) ** 2, np.ones(4))

    def test_demodulate_inverts_modulate(self):
        """Test hard decisions recover the mapped bits."""
        bits = np.random.default_rng(1).integers(0, 2, size=200)
        assert_array_equal(qam_demodulate(qam_modulate(bits)), bits)

    def test_zero_component_decides_positive(self):
        """Test a zero real or imaginary part is read as bit 0."""
        assert_array_equal(qam_demodulate([0j]), [0, 0])

    def test_odd_bit_count_rejected(self):
        """Test 4-QAM refuses an odd number of bits."""
        with self.assertRaises(DimensionError):
            qam_modulate([0, 1, 1])

    def test_hard_decision_keeps_shape(self):
        """Test hard decision snaps noisy symbols to the nearest point."""
        noisy = np.array([[0.9 + 0.2j, -0.1 - 0.8j]])
        expected = np.array([[1 + 1j, -1 - 1j]]) / np.sqrt(2)
        assert_allclose(hard_decision(noisy), expected)


class TransformTest(SimpleTestCase):

    def test_inverse_round_trip(self):
        """Test dft followed by its inverse returns the input."""
        x = np.random.default_rng(2).standard_normal(64) + 1j
        assert_allclose(dft(dft(x), inverse=True), x, atol=1e-12)

    def test_matches_definition(self):
        """Test the forward transform is the unscaled DFT sum."""
        x = np.random.default_rng(3).standard_normal(8) + 0j
        n = np.arange(8)
        direct = np.array([np.sum(x * np.exp(-2j * np.pi * k * n / 8)) for k in range(8)])
        assert_allclose(dft(x), direct, atol=1e-12)

    def test_energy_preserved(self):
        """Test the unscaled forward transform carries N times the time-domain energy."""
        rng = np.random.default_rng(4)
        x = rng.standard_normal(256) + 1j * rng.standard_normal(256)
        assert_allclose(np.sum(np.abs(dft(x)) ** 2) / 256, np.sum(np.abs(x) ** 2), rtol=1e-12)

    def test_length_must_be_power_of_two(self):
        """Test non power-of-two lengths are refused."""
        with self.assertRaises(DimensionError):
            dft(np.ones(6))


class OfdmSymbolTest(SimpleTestCase):

    def setUp(self):
        self.cfg = small_ofdm()
        rng = np.random.default_rng(4)
        self.grid = rng.standard_normal((3, 64)) + 1j * rng.standard_normal((3, 64))

    def test_cyclic_prefix_copies_tail(self):
        """Test the prefix repeats the last cp_length samples of each symbol."""
        samples = ofdm_modulate(self.grid, self.cfg)
        self.assertEqual(samples.shape, (3, 72))
        assert_allclose(samples[:, :8], samples[:, -8:])

    def test_modulate_demodulate_round_trip(self):
        """Test demodulation strips the prefix and recovers the grid."""
        samples = ofdm_modulate(self.grid, self.cfg)
        assert_allclose(ofdm_demodulate(samples, self.cfg), self.grid, atol=1e-12)

    def test_wrong_symbol_length(self):
        """Test demodulation refuses samples of the wrong length."""
        with self.assertRaises(DimensionError):
            ofdm_demodulate(np.zeros(70), self.cfg)


class FrameLayoutTest(SimpleTestCase):

    def test_default_layout(self):
        """Test occupied, pilot, data and guard bins of the default link."""
        layout = FrameLayout.from_config(OfdmConfig())
        self.assertEqual(layout.occupied.size, 128)
        self.assertEqual(layout.pilot_subcarrier_indices.size, 16)
        self.assertEqual(layout.data_subcarrier_indices.size, 112)
        self.assertEqual(layout.guard_indices.size, 128)
        self.assertIn(0, layout.guard_indices)
        self.assertIn(128, layout.guard_indices)
        assert_array_equal(layout.occupied_frequencies, np.r_[-64:0, 1:65])

    def test_pilots_spread_over_band(self):
        """Test pilots sit every eighth occupied subcarrier."""
        layout = FrameLayout.from_config(small_ofdm())
        assert_array_equal(layout.pilot_positions, [0, 8, 16, 24])
        assert_array_equal(layout.pilot_frequencies, [-16, -8, 1, 9])

    def test_bins_are_disjoint(self):
        """Test pilot, data and guard bins partition the transform."""
        layout = FrameLayout.from_config(small_ofdm())
        everything = np.concatenate([layout.pilot_subcarrier_indices,
                                     layout.data_subcarrier_indices, layout.guard_indices])
        assert_array_equal(np.sort(everything), np.arange(64))

    def test_insert_and_extract(self):
        """Test pilots and data come back out of the bins they were put in."""
        layout = FrameLayout.from_config(small_ofdm())
        data = np.arange(28) + 1j
        grid = insert_pilots(data, layout, pilot_value=2.0)
        pilots, recovered = extract_pilots(grid, layout)
        assert_allclose(pilots, np.full(4, 2.0))
        assert_allclose(recovered, data)
        assert_allclose(grid[layout.guard_indices], 0)

    def test_insert_wrong_data_count(self):
        """Test a payload of the wrong width is refused."""
        layout = FrameLayout.from_config(small_ofdm())
        with self.assertRaises(DimensionError):
            insert_pilots(np.zeros(27), layout)


class PreambleTest(SimpleTestCase):

    def test_two_identical_unit_power_halves(self):
        """Test the preamble is two copies of a unit-power QPSK half."""
        preamble = build_preamble(OfdmConfig(), seed=0)
        self.assertEqual(len(preamble), 320)
        assert_allclose(preamble.full[:160], preamble.full[160:])
        assert_allclose(np.mean(np.abs(preamble.half) ** 2), 1.0)

    def test_seed_reproducible(self):
        """Test the same seed gives the same preamble."""
        assert_array_equal(build_preamble(OfdmConfig(), 3).half, build_preamble(OfdmConfig(), 3).half)
