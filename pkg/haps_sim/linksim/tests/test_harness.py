import math
import shutil
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from ..channel import ChannelRealization
from ..exceptions import DimensionError, MissingModelError
from ..harness import (
    MetricRecord,
    artificial_channel,
    ber,
    estimator_label,
    is_packet_lost,
    mse,
    run_noma_dl_sweep,
    run_noma_ul_sweep,
    run_oma_sweep,
    run_sweep,
    theory_ls_mse,
    theory_qpsk_ber,
    uplink_reference_gain,
)
from ..neuralnet import CnnModel
from ..noma import NomaConfig
from ..storage import save_model
from .fixtures import fixed_cfo, flat_channel, small_scenario


def clean_scenario(**overrides):
    values = dict(channel=flat_channel(), cfo=fixed_cfo(0.1), noiseless=True)
    values.update(overrides)
    return small_scenario(**values)


class MetricTest(SimpleTestCase):

    def test_ber(self):
        """Test the fraction of differing bits."""
        self.assertEqual(ber([0, 1, 1, 0], [0, 1, 0, 1]), 0.5)
        self.assertEqual(ber([1, 1], [1, 1]), 0.0)

    def test_ber_length_mismatch(self):
        """Test bit sequences must have equal length."""
        with self.assertRaises(DimensionError):
            ber([0, 1], [0])
        with self.assertRaises(DimensionError):
            ber([], [])

    def test_mse(self):
        """Test the mean squared magnitude of complex errors."""
        self.assertAlmostEqual(mse([1 + 1j, 0], [0, 0]), 1.0)
        with self.assertRaises(DimensionError):
            mse([1, 2], [1])

    def test_packet_loss_threshold(self):
        """Test a packet is lost once the CFO error exceeds half a subcarrier."""
        self.assertFalse(is_packet_lost(0.2, -0.3))
        self.assertTrue(is_packet_lost(0.3, -0.3))

    def test_theory_curves(self):
        """Test the LS and 4-QAM reference curves."""
        self.assertAlmostEqual(theory_ls_mse(10.0), 0.1)
        self.assertAlmostEqual(theory_qpsk_ber(0.0), 0.5 * math.erfc(math.sqrt(0.5)))
        self.assertLess(theory_qpsk_ber(10.0), 1e-3)


class OmaSweepTest(SimpleTestCase):

    def test_record_per_snr_point(self):
        """Test one user-0 record per grid point, in grid order."""
        records = run_oma_sweep(small_scenario())
        self.assertEqual([r.snr_db for r in records], [10.0, 20.0])
        self.assertTrue(all(r.user == 0 and r.estimator == 'classical' for r in records))
        self.assertIsInstance(records[0], MetricRecord)

    def test_clean_link(self):
        """Test a noiseless flat link is error free."""
        for record in run_oma_sweep(clean_scenario()):
            self.assertEqual(record.ber, 0.0)
            self.assertEqual(record.packet_loss, 0.0)
            self.assertLess(record.mse_cfo, 1e-18)
            self.assertLess(record.mse_channel, 1e-18)

    def test_perfect_csi(self):
        """Test the perfect-CSI receiver has zero estimation error."""
        records = run_oma_sweep(small_scenario(perfect_csi=True))
        for record in records:
            self.assertEqual(record.estimator, 'perfect')
            self.assertEqual(record.mse_cfo, 0.0)
            self.assertEqual(record.mse_channel, 0.0)

    def test_ber_falls_with_snr(self):
        """Test the link improves from 0 dB to 30 dB."""
        low, high = run_oma_sweep(small_scenario(snr_grid=(0.0, 30.0)))
        self.assertGreater(low.ber, high.ber)
        self.assertGreater(low.mse_channel, high.mse_channel)

    def test_reproducible_across_workers(self):
        """Test the same seed gives the same records with one or two workers."""
        serial = run_oma_sweep(small_scenario())
        self.assertEqual(run_oma_sweep(small_scenario()), serial)
        self.assertEqual(run_oma_sweep(small_scenario(workers=2)), serial)

    def test_seed_changes_results(self):
        """Test another seed draws other frames."""
        self.assertNotEqual(run_oma_sweep(small_scenario(seed=8)), run_oma_sweep(small_scenario()))

    def test_logs_progress(self):
        """Test every SNR point is logged."""
        with self.assertLogs('linksim.harness', level='INFO') as logs:
            run_oma_sweep(small_scenario(trials=1))
        self.assertEqual(sum('done' in line for line in logs.output), 2)


class CnnSweepTest(SimpleTestCase):

    def setUp(self):
        self.tmpdir = Path(tempfile.mkdtemp())
        self.cfo_path = self.tmpdir / 'cfo.npz'
        self.ce_path = self.tmpdir / 'ce.npz'
        save_model(CnnModel.identity((4, 1, 1), kernel_size=3), self.cfo_path)
        save_model(CnnModel.identity((32, 2, 1), kernel_size=3), self.ce_path)

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def test_missing_models(self):
        """Test a CNN sweep without model files is refused."""
        with self.assertRaises(MissingModelError):
            run_oma_sweep(small_scenario(estimator='cnn'))

    def test_missing_model_file(self):
        """Test a model path that does not exist is reported."""
        scenario = small_scenario(estimator='cnn', cfo_model_path=str(self.tmpdir / 'nope.npz'),
                                  ce_model_path=str(self.ce_path))
        with self.assertRaises(MissingModelError):
            run_oma_sweep(scenario)

    def test_identity_networks_match_classical(self):
        """Test pass-through networks give the classical receiver's metrics."""
        scenario = small_scenario(estimator='cnn', cfo_model_path=str(self.cfo_path),
                                  ce_model_path=str(self.ce_path))
        cnn = run_oma_sweep(scenario)
        classical = run_oma_sweep(small_scenario())
        self.assertEqual([r.estimator for r in cnn], ['cnn', 'cnn'])
        self.assertEqual([r._replace(estimator='classical') for r in cnn], classical)


class NomaSweepTest(SimpleTestCase):

    def test_downlink_records(self):
        """Test one record per user and grid point."""
        records = run_noma_dl_sweep(small_scenario(mode='noma-dl'))
        self.assertEqual(len(records), 6)
        self.assertEqual([r.user for r in records[:3]], [1, 2, 3])

    def test_clean_downlink(self):
        """Test SIC on a noiseless flat downlink decodes every user."""
        for record in run_noma_dl_sweep(clean_scenario(mode='noma-dl')):
            self.assertEqual(record.ber, 0.0)

    def test_clean_uplink(self):
        """Test SIC on a noiseless flat uplink decodes every user."""
        for record in run_noma_ul_sweep(clean_scenario(mode='noma-ul', ul_shared_channel=True)):
            self.assertEqual(record.ber, 0.0)
            self.assertLess(record.mse_channel, 1e-18)

    def test_weak_user_errs_least_at_low_snr(self):
        """Test the high-power user is the most reliable at 0 dB."""
        records = run_noma_dl_sweep(small_scenario(mode='noma-dl', snr_grid=(0.0,), trials=10))
        self.assertLess(records[0].ber, records[2].ber)

    def test_run_sweep_follows_mode(self):
        """Test the generic entry point dispatches on the scenario mode."""
        scenario = small_scenario(mode='noma-ul')
        self.assertEqual(run_sweep(scenario), run_noma_ul_sweep(scenario))

    def test_uplink_reference_gain(self):
        """Test every user contributes √P_t/M to the pilots."""
        cfg = NomaConfig()
        total = sum(math.sqrt(cfg.alpha(i)) * uplink_reference_gain(cfg, i) for i in (1, 2, 3))
        self.assertAlmostEqual(total, 1.0)

    def test_artificial_channel_is_mean(self):
        """Test the uplink reference channel averages the user taps."""
        mean = artificial_channel([ChannelRealization.from_taps([1.0], 8),
                                   ChannelRealization.from_taps([0.0, 1.0], 8)], 8)
        self.assertEqual(list(mean.taps), [0.5, 0.5])

    def test_label(self):
        """Test perfect CSI overrides the estimator name."""
        self.assertEqual(estimator_label(small_scenario(estimator='cnn', perfect_csi=True)), 'perfect')
