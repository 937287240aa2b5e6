from django.core.management.base import BaseCommand, CommandError

from nes.services.exceptions import NesError
from nes.services.experiment import load_config, run_experiment


class Command(BaseCommand):
    """Запускает серию прогонов по файлу конфигурации эксперимента."""

    help = (
        "Запускает эксперимент (задачи x алгоритмы x прогоны) и пишет "
        "run_<k>.json, trace.csv, summary.csv и summary.json."
    )

    def add_arguments(self, parser) -> None:
        """Описать CLI-аргументы команды."""
        parser.add_argument(
            "-c",
            "--config",
            required=True,
            help="Файл конфигурации KEY=VALUE (см. experiments/*.env)",
        )
        parser.add_argument(
            "--jobs",
            type=int,
            default=None,
            help="Число параллельных процессов",
        )
        parser.add_argument(
            "--seed",
            type=int,
            default=None,
            help="Глобальное зерно (перекрывает SEED из файла)",
        )
        parser.add_argument(
            "--out",
            type=str,
            default=None,
            help="Каталог результатов (перекрывает OUT из файла)",
        )
        parser.add_argument(
            "--save",
            action="store_true",
            help="Сохранить эксперимент и прогоны в базу данных",
        )

    def handle(self, *args, **opts) -> None:
        """Выполнить эксперимент и вывести сводку."""
        try:
            config = load_config(
                opts["config"], seed=opts["seed"], jobs=opts["jobs"], out=opts["out"]
            )
            result = run_experiment(config)
        except NesError as exc:
            raise CommandError(str(exc)) from exc

        self.stdout.write("\n" + self.style.MIGRATE_HEADING("Сводка эксперимента"))
        self.stdout.write(f"Прогонов: {len(result.reports)}")
        rows = result.summary[result.summary["indicator"].isin(["igd", "nof", "rr"])]
        for row in rows.itertuples():
            self.stdout.write(
                f"{row.problem:>10} {row.algorithm:>11} {row.indicator:>4}: "
                f"mean={row.mean:.4e} best={row.best:.4e} worst={row.worst:.4e}"
            )
        self.stdout.write(f"Результаты: {config.out}")

        if opts["save"]:
            from nes.services.persistence import save_experiment

            experiment = save_experiment(result, config)
            self.stdout.write(
                self.style.SUCCESS(f"Сохранено как эксперимент #{experiment.pk}.")
            )

        if result.failures:
            for report in result.failures:
                self.stdout.write(
                    self.style.WARNING(
                        f"{report.problem} / {report.algorithm} / {report.run}: "
                        f"{report.error}"
                    )
                )
            raise CommandError(
                f"Ошибок в ячейках: {len(result.failures)}", returncode=2
            )
        self.stdout.write(self.style.SUCCESS("Эксперимент завершён."))
