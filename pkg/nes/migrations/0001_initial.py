# Generated by Django 5.2.6 on 2026-10-19 09:00

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="Experiment",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("name", models.CharField(db_index=True, max_length=255)),
                ("seed", models.BigIntegerField()),
                ("runs", models.PositiveIntegerField()),
                ("config", models.JSONField(default=dict)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
            ],
            options={
                "ordering": ["-created_at"],
            },
        ),
        migrations.CreateModel(
            name="RunRecord",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("problem", models.CharField(db_index=True, max_length=255)),
                ("algorithm", models.CharField(db_index=True, max_length=32)),
                ("run_index", models.PositiveIntegerField()),
                (
                    "seed",
                    models.CharField(
                        help_text="64-битное зерно ячейки (десятичная запись)",
                        max_length=20,
                    ),
                ),
                ("evaluations", models.PositiveIntegerField(default=0)),
                ("wall_time", models.FloatField(default=0.0)),
                ("igd", models.FloatField(blank=True, null=True)),
                ("nof", models.FloatField(blank=True, null=True)),
                ("roots_found", models.PositiveIntegerField(blank=True, null=True)),
                ("qr", models.FloatField(blank=True, null=True)),
                ("success", models.BooleanField(blank=True, null=True)),
                ("error", models.TextField(blank=True, default="")),
                ("report", models.JSONField(default=dict)),
                (
                    "experiment",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="records",
                        to="nes.experiment",
                    ),
                ),
            ],
            options={
                "indexes": [
                    models.Index(
                        fields=["problem", "algorithm"],
                        name="nes_run_problem_alg_idx",
                    )
                ],
                "constraints": [
                    models.UniqueConstraint(
                        fields=("experiment", "problem", "algorithm", "run_index"),
                        name="uniq_experiment_cell_run",
                    )
                ],
            },
        ),
    ]
