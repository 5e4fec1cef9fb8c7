from django.contrib import admin
from .models import SweepRun, SweepRecord


class SweepRecordInline(admin.TabularInline):
    model = SweepRecord
    extra = 0
    readonly_fields = ['snr_db', 'estimator', 'user', 'mse_cfo', 'mse_channel', 'ber', 'packet_loss']
    can_delete = False


@admin.register(SweepRun)
class SweepRunAdmin(admin.ModelAdmin):
    list_display = ['id', 'mode', 'estimator', 'seed', 'digest_preview', 'record_count', 'created_at']
    list_filter = ['mode', 'estimator', 'created_at']
    search_fields = ['scenario_digest', 'csv_path']
    readonly_fields = ['created_at']
    ordering = ['-created_at']
    inlines = [SweepRecordInline]

    fieldsets = (
        (None, {
            'fields': ('mode', 'estimator', 'seed', 'csv_path')
        }),
        ('Scenario', {
            'fields': ('scenario_digest', 'config'),
            'classes': ('collapse',)
        }),
        ('Metadata', {
            'fields': ('created_at',),
            'classes': ('collapse',)
        }),
    )

    def digest_preview(self, obj):
        return obj.scenario_digest[:12]

    digest_preview.short_description = 'Scenario'


@admin.register(SweepRecord)
class SweepRecordAdmin(admin.ModelAdmin):
    list_display = ['run', 'snr_db', 'estimator', 'user', 'ber', 'packet_loss']
    list_filter = ['estimator', 'user', 'run__mode']
    search_fields = ['run__scenario_digest']
    ordering = ['run', 'snr_db', 'user']
