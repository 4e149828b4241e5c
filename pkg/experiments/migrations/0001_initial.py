# Generated by Django 4.2.16 on 2026-10-19 09:30

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(choices=[('channel_map', 'Channel map'), ('ber_sweep', 'BER sweep'), ('throughput_sweep', 'Throughput sweep'), ('mobility', 'Mobility'), ('validate', 'Validate')], max_length=30)),
                ('preset', models.CharField(blank=True, max_length=20)),
                ('config_hash', models.CharField(db_index=True, max_length=64)),
                ('seed', models.CharField(blank=True, max_length=20)),
                ('status', models.CharField(choices=[('running', 'Running'), ('completed', 'Completed'), ('failed', 'Failed')], default='running', max_length=20)),
                ('parameters', models.JSONField(default=dict)),
                ('output_paths', models.JSONField(default=list)),
                ('error_message', models.TextField(blank=True)),
                ('started_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'verbose_name': 'Experiment run',
                'verbose_name_plural': 'Experiment runs',
                'ordering': ['-started_at'],
                'indexes': [models.Index(fields=['kind', 'status'], name='experiments_kind_status_idx')],
            },
        ),
    ]
