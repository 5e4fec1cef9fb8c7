from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='SweepRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('mode', models.CharField(choices=[('oma', 'OMA'), ('noma-dl', 'NOMA downlink'), ('noma-ul', 'NOMA uplink')], max_length=10)),
                ('estimator', models.CharField(help_text='Receiver used for the sweep', max_length=20)),
                ('seed', models.BigIntegerField()),
                ('scenario_digest', models.CharField(help_text='SHA-256 of the scenario echo', max_length=64)),
                ('config', models.JSONField(help_text='Scenario echo')),
                ('csv_path', models.CharField(blank=True, max_length=500)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
            },
        ),
        migrations.CreateModel(
            name='SweepRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('snr_db', models.FloatField()),
                ('estimator', models.CharField(max_length=20)),
                ('user', models.PositiveSmallIntegerField(default=0)),
                ('mse_cfo', models.FloatField(null=True)),
                ('mse_channel', models.FloatField(null=True)),
                ('ber', models.FloatField()),
                ('packet_loss', models.FloatField()),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='records', to='linksim.sweeprun')),
            ],
            options={
                'ordering': ['run', 'snr_db', 'user'],
            },
        ),
        migrations.AddIndex(
            model_name='sweeprun',
            index=models.Index(fields=['-created_at'], name='linksim_run_created_idx'),
        ),
        migrations.AddIndex(
            model_name='sweeprecord',
            index=models.Index(fields=['run', 'snr_db'], name='linksim_record_snr_idx'),
        ),
    ]
