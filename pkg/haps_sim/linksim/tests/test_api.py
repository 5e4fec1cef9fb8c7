import math

from django.test import TestCase, override_settings
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APITestCase

from ..harness import MetricRecord
from ..models import SweepRecord, SweepRun
from .fixtures import small_scenario


def sample_records():
    return [
        MetricRecord(10.0, 'classical', 0, 1e-4, 0.05, 0.01, 0.0),
        MetricRecord(20.0, 'classical', 0, 1e-5, math.nan, 0.001, 0.0),
    ]


class SweepRunModelTest(TestCase):

    def setUp(self):
        self.scenario = small_scenario()
        self.run = SweepRun.objects.archive(sample_records(), self.scenario, '/tmp/sweep.csv')

    def test_archive_stores_run_and_records(self):
        """Test archiving stores the run header and one row per record."""
        self.assertEqual(self.run.mode, 'oma')
        self.assertEqual(self.run.seed, 7)
        self.assertEqual(self.run.scenario_digest, self.scenario.digest())
        self.assertEqual(self.run.config['seed'], 7)
        self.assertEqual(self.run.record_count, 2)
        self.assertEqual(SweepRecord.objects.count(), 2)

    def test_nan_stored_as_null(self):
        """Test undefined metrics are stored as NULL."""
        record = self.run.records.get(snr_db=20.0)
        self.assertIsNone(record.mse_channel)
        self.assertEqual(record.mse_cfo, 1e-5)

    def test_perfect_csi_label(self):
        """Test perfect-CSI runs are labelled as such."""
        run = SweepRun.objects.archive([], small_scenario(perfect_csi=True))
        self.assertEqual(run.estimator, 'perfect')

    def test_str_representation(self):
        """Test the string forms of runs and records."""
        self.assertEqual(str(self.run), 'oma/classical seed=7')
        self.assertEqual(str(self.run.records.get(snr_db=10.0)), '10 dB user 0: BER 0.01')

    def test_records_deleted_with_run(self):
        """Test records go away with their run."""
        self.run.delete()
        self.assertEqual(SweepRecord.objects.count(), 0)


@override_settings(SECURE_SSL_REDIRECT=False)
class SweepRunListAPITest(APITestCase):

    def setUp(self):
        self.url = reverse('sweep-run-list')
        SweepRun.objects.archive(sample_records(), small_scenario(), '/tmp/a.csv')
        SweepRun.objects.archive(sample_records()[:1], small_scenario(mode='noma-dl'), '/tmp/b.csv')

    def test_list_runs(self):
        """Test listing archived runs with their record counts, newest first."""
        response = self.client.get(self.url)

        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(len(response.data['results']), 2)
        newest = response.data['results'][0]
        self.assertEqual(newest['mode'], 'noma-dl')
        self.assertEqual(newest['record_count'], 1)
        self.assertIn('scenario_digest', newest)
        self.assertIn('created_at', newest)

    def test_list_order_with_equal_timestamps(self):
        """Test runs archived in the same instant are listed newest id first with their own counts."""
        third = SweepRun.objects.archive([], small_scenario(mode='noma-ul'))
        SweepRun.objects.update(created_at=third.created_at)

        response = self.client.get(self.url)

        self.assertEqual(response.status_code, status.HTTP_200_OK)
        results = response.data['results']
        self.assertEqual([r['mode'] for r in results], ['noma-ul', 'noma-dl', 'oma'])
        self.assertEqual([r['record_count'] for r in results], [0, 1, 2])

    def test_list_is_read_only(self):
        """Test runs cannot be created through the API."""
        response = self.client.post(self.url, {'mode': 'oma'}, format='json')
        self.assertEqual(response.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)


@override_settings(SECURE_SSL_REDIRECT=False)
class SweepRunDetailAPITest(APITestCase):

    def setUp(self):
        self.run = SweepRun.objects.archive(sample_records(), small_scenario(), '/tmp/a.csv')
        self.url = reverse('sweep-run-detail', kwargs={'id': self.run.id})

    def test_get_run_detail(self):
        """Test retrieving a run with its echo and records."""
        response = self.client.get(self.url)

        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['record_count'], 2)
        self.assertEqual(response.data['config']['trials'], 4)
        self.assertEqual(response.data['csv_path'], '/tmp/a.csv')
        records = response.data['records']
        self.assertEqual([r['snr_db'] for r in records], [10.0, 20.0])
        self.assertIsNone(records[1]['mse_channel'])

    def test_get_nonexistent_run(self):
        """Test a missing run returns 404."""
        url = reverse('sweep-run-detail', kwargs={'id': 99999})
        response = self.client.get(url)
        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)

    def test_schema_available(self):
        """Test the OpenAPI schema lists the run endpoints."""
        response = self.client.get(reverse('schema'))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertIn(b'/api/runs/', response.content)
