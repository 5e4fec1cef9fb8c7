import math

from django.db import models, transaction


def _nullable(value):
    return None if value is None or math.isnan(value) else float(value)


class SweepRunManager(models.Manager):

    def archive(self, records, scenario, csv_path=''):
        """Store one finished sweep and its metric records atomically."""
        with transaction.atomic():
            run = self.create(
                mode=scenario.mode,
                estimator='perfect' if scenario.perfect_csi else scenario.estimator,
                seed=scenario.seed,
                scenario_digest=scenario.digest(),
                config=scenario.echo(),
                csv_path=str(csv_path),
            )
            SweepRecord.objects.bulk_create([
                SweepRecord(
                    run=run,
                    snr_db=r.snr_db,
                    estimator=r.estimator,
                    user=r.user,
                    mse_cfo=_nullable(r.mse_cfo),
                    mse_channel=_nullable(r.mse_channel),
                    ber=r.ber,
                    packet_loss=r.packet_loss,
                )
                for r in records
            ])
        return run


class SweepRun(models.Model):
    """
    One Monte Carlo sweep.

    The full scenario echo is stored with the run so the records can be
    reproduced from the database alone.
    """
    MODE_CHOICES = [
        ('oma', 'OMA'),
        ('noma-dl', 'NOMA downlink'),
        ('noma-ul', 'NOMA uplink'),
    ]

    mode = models.CharField(max_length=10, choices=MODE_CHOICES)
    estimator = models.CharField(max_length=20, help_text="Receiver used for the sweep")
    seed = models.BigIntegerField()
    scenario_digest = models.CharField(max_length=64, help_text="SHA-256 of the scenario echo")
    config = models.JSONField(help_text="Scenario echo")
    csv_path = models.CharField(max_length=500, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    objects = SweepRunManager()

    class Meta:
        ordering = ['-created_at', '-id']
        indexes = [
            models.Index(fields=['-created_at'], name='linksim_run_created_idx'),
        ]

    def __str__(self):
        return f"{self.mode}/{self.estimator} seed={self.seed}"

    @property
    def record_count(self):
        return self.records.count()


class SweepRecord(models.Model):
    """Metrics of one (SNR point, estimator, user) triple; user 0 stands for OMA."""
    run = models.ForeignKey(
        SweepRun,
        on_delete=models.CASCADE,
        related_name='records',
    )
    snr_db = models.FloatField()
    estimator = models.CharField(max_length=20)
    user = models.PositiveSmallIntegerField(default=0)
    mse_cfo = models.FloatField(null=True)
    mse_channel = models.FloatField(null=True)
    ber = models.FloatField()
    packet_loss = models.FloatField()

    class Meta:
        ordering = ['run', 'snr_db', 'user']
        indexes = [
            models.Index(fields=['run', 'snr_db'], name='linksim_record_snr_idx'),
        ]

    def __str__(self):
        return f"{self.snr_db:g} dB user {self.user}: BER {self.ber:.3g}"
