from django.db import models


class Experiment(models.Model):
    """Сохранённый запуск nes_run (конфигурация и зерно)."""

    name = models.CharField(max_length=255, db_index=True)
    seed = models.BigIntegerField()
    runs = models.PositiveIntegerField()
    config = models.JSONField(default=dict)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ["-created_at"]

    def __str__(self) -> str:
        return f"{self.name} (seed={self.seed})"


class RunRecord(models.Model):
    """Один прогон: задача x алгоритм x номер прогона."""

    experiment = models.ForeignKey(
        Experiment,
        on_delete=models.CASCADE,
        related_name="records",
    )
    problem = models.CharField(max_length=255, db_index=True)
    algorithm = models.CharField(max_length=32, db_index=True)
    run_index = models.PositiveIntegerField()
    seed = models.CharField(
        max_length=20,
        help_text="64-битное зерно ячейки (десятичная запись)",
    )
    evaluations = models.PositiveIntegerField(default=0)
    wall_time = models.FloatField(default=0.0)
    igd = models.FloatField(null=True, blank=True)
    nof = models.FloatField(null=True, blank=True)
    roots_found = models.PositiveIntegerField(null=True, blank=True)
    qr = models.FloatField(null=True, blank=True)
    success = models.BooleanField(null=True, blank=True)
    error = models.TextField(blank=True, default="")
    report = models.JSONField(default=dict)

    class Meta:
        constraints = [
            models.UniqueConstraint(
                fields=["experiment", "problem", "algorithm", "run_index"],
                name="uniq_experiment_cell_run",
            ),
        ]
        indexes = [
            models.Index(
                fields=["problem", "algorithm"],
                name="nes_run_problem_alg_idx",
            ),
        ]

    def __str__(self) -> str:
        return f"{self.problem} / {self.algorithm} #{self.run_index}"
