from django.contrib import admin
from .models import Experiment, RunRecord


@admin.register(Experiment)
class ExperimentAdmin(admin.ModelAdmin):
    list_display = ('name', 'seed', 'runs', 'created_at')
    search_fields = ('name',)


@admin.register(RunRecord)
class RunRecordAdmin(admin.ModelAdmin):
    list_display = (
        'experiment', 'problem', 'algorithm', 'run_index',
        'evaluations', 'igd', 'nof', 'roots_found', 'success',
    )
    list_filter = ('algorithm', 'problem', 'success')
    search_fields = ('problem', 'experiment__name')
