from django.contrib import admin

from .models import RunResult, SweepRecord


class RunResultInline(admin.TabularInline):
    model = RunResult
    extra = 0
    can_delete = False
    fields = ['run_id', 'rel_error_eval', 'rel_error_ic', 'residual_trace', 'ic_trace', 'diverged']
    readonly_fields = fields
    show_change_link = True


@admin.register(SweepRecord)
class SweepRecordAdmin(admin.ModelAdmin):
    list_display = ['id', 'benchmark', 'run_count', 'diverged_count', 'workers', 'csv_path', 'created_at']
    list_filter = ['benchmark']
    search_fields = ['csv_path', 'config_text']
    readonly_fields = ['created_at']
    inlines = [RunResultInline]


@admin.register(RunResult)
class RunResultAdmin(admin.ModelAdmin):
    list_display = ['run_id', 'complexity', 'seed', 'depth', 'width', 'learning_rate', 'arch',
                    'formulation', 'rel_error_eval', 'rel_error_ic', 'diverged']
    list_filter = ['sweep__benchmark', 'complexity', 'arch', 'formulation', 'depth', 'width', 'diverged']
    search_fields = ['run_id', 'message']
    readonly_fields = ['wall_seconds']
