from django.db import models, transaction

from pinns.networks import Architecture
from pinns.systems import Benchmark
from pinns.training import Formulation


class SweepRecord(models.Model):
    """One recorded `sweep --record` invocation."""

    benchmark = models.CharField(max_length=16, choices=Benchmark.choices)
    config_text = models.TextField(help_text="The sweep config document as given")
    csv_path = models.CharField(max_length=512)
    workers = models.PositiveIntegerField(default=1)
    run_count = models.PositiveIntegerField(default=0)
    diverged_count = models.PositiveIntegerField(default=0)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        db_table = 'sweep_records'
        verbose_name = 'Sweep'
        verbose_name_plural = 'Sweeps'
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.benchmark} sweep ({self.run_count} runs) -> {self.csv_path}"

    def __repr__(self):
        return f"<SweepRecord(id={self.pk!r}, benchmark={self.benchmark!r}, run_count={self.run_count!r})>"

    @classmethod
    def from_sweep(cls, spec, result, config_text: str = '', workers: int = 1) -> 'SweepRecord':
        """Stores a finished sweep and all of its rows in one transaction."""
        with transaction.atomic():
            record = cls.objects.create(
                benchmark=spec.benchmark,
                config_text=config_text,
                csv_path=str(result.path),
                workers=workers,
                run_count=len(result.rows),
                diverged_count=result.diverged,
            )
            RunResult.objects.bulk_create([RunResult.from_row(record, row) for row in result.rows])
        return record


class RunResult(models.Model):
    sweep = models.ForeignKey(SweepRecord, on_delete=models.CASCADE, related_name='results')
    run_id = models.CharField(max_length=128)
    complexity = models.IntegerField()
    horizon = models.FloatField(blank=True, null=True)
    seed = models.IntegerField(default=0)
    depth = models.PositiveSmallIntegerField()
    width = models.PositiveSmallIntegerField()
    learning_rate = models.FloatField()
    arch = models.CharField(max_length=16, choices=Architecture.choices)
    formulation = models.CharField(max_length=16, choices=Formulation.choices)
    iterations = models.PositiveIntegerField()
    training_points = models.PositiveIntegerField(help_text="D, number of collocation points")

    rel_error_eval = models.FloatField(blank=True, null=True)
    rel_error_train = models.FloatField(blank=True, null=True)
    rel_error_ic = models.FloatField(blank=True, null=True)
    residual_loss = models.FloatField(blank=True, null=True)
    ic_loss = models.FloatField(blank=True, null=True)
    residual_trace = models.FloatField(blank=True, null=True)
    residual_trace_stderr = models.FloatField(blank=True, null=True)
    ic_trace = models.FloatField(blank=True, null=True)
    ic_trace_stderr = models.FloatField(blank=True, null=True)

    iterations_completed = models.PositiveIntegerField(default=0)
    wall_seconds = models.FloatField(blank=True, null=True)
    diverged = models.BooleanField(default=False)
    message = models.TextField(blank=True, default='')

    class Meta:
        db_table = 'run_results'
        verbose_name = 'Run Result'
        verbose_name_plural = 'Run Results'
        ordering = ['sweep', 'complexity', 'seed', 'run_id']

    def __str__(self):
        return self.run_id

    @classmethod
    def from_row(cls, sweep: SweepRecord, row) -> 'RunResult':
        return cls(
            sweep=sweep,
            run_id=row.run_id,
            complexity=row.complexity,
            horizon=row.horizon,
            seed=row.seed,
            depth=row.depth,
            width=row.width,
            learning_rate=row.learning_rate,
            arch=row.arch,
            formulation=row.formulation,
            iterations=row.iterations,
            training_points=row.D,
            rel_error_eval=row.rel_error_eval,
            rel_error_train=row.rel_error_train,
            rel_error_ic=row.rel_error_ic,
            residual_loss=row.residual_loss,
            ic_loss=row.ic_loss,
            residual_trace=row.residual_trace,
            residual_trace_stderr=row.residual_trace_stderr,
            ic_trace=row.ic_trace,
            ic_trace_stderr=row.ic_trace_stderr,
            iterations_completed=row.iterations_completed,
            wall_seconds=row.wall_seconds,
            diverged=row.diverged,
            message=row.message,
        )
