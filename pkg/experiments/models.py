from django.db import models
from django.utils import timezone


class ExperimentRun(models.Model):
    """One invocation of an experiment command"""
    KIND_CHOICES = [
        ('channel_map', 'Channel map'),
        ('ber_sweep', 'BER sweep'),
        ('throughput_sweep', 'Throughput sweep'),
        ('mobility', 'Mobility'),
        ('validate', 'Validate'),
    ]
    STATUS_CHOICES = [
        ('running', 'Running'),
        ('completed', 'Completed'),
        ('failed', 'Failed'),
    ]

    kind = models.CharField(max_length=30, choices=KIND_CHOICES)
    preset = models.CharField(max_length=20, blank=True)
    config_hash = models.CharField(max_length=64, db_index=True)
    seed = models.CharField(max_length=20, blank=True)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='running')

    # Resolved config and what the run wrote
    parameters = models.JSONField(default=dict)
    output_paths = models.JSONField(default=list)
    error_message = models.TextField(blank=True)

    # Timestamps
    started_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(blank=True, null=True)

    class Meta:
        ordering = ['-started_at']
        verbose_name = 'Experiment run'
        verbose_name_plural = 'Experiment runs'
        indexes = [
            models.Index(fields=['kind', 'status'], name='experiments_kind_status_idx'),
        ]

    def __str__(self):
        label = f'{self.kind} [{self.preset}]' if self.preset else self.kind
        return f'{label} {self.config_hash[:12]} ({self.get_status_display()})'

    @property
    def duration(self):
        if self.finished_at is None:
            return None
        return self.finished_at - self.started_at

    def mark_completed(self, paths):
        self.status = 'completed'
        self.output_paths = [str(p) for p in paths]
        self.finished_at = timezone.now()
        self.save(update_fields=['status', 'output_paths', 'finished_at'])

    def mark_failed(self, message):
        self.status = 'failed'
        self.error_message = str(message)
        self.finished_at = timezone.now()
        self.save(update_fields=['status', 'error_message', 'finished_at'])
