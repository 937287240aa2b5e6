from django.core.management.base import BaseCommand, CommandError

from nes.services.exceptions import NesError
from nes.services.oracle import GRID_POINTS, oracle_roots, write_fixture
from nes.services.suite import fixture_path, resolve_problem


class Command(BaseCommand):
    """Пересчитывает эталонные корни задачи сеточным оракулом."""

    help = (
        "Находит все корни малой задачи (n <= 3) сеткой и уточнением; "
        "с --write сохраняет data/suite/roots/<имя>.json."
    )

    def add_arguments(self, parser) -> None:
        """Описать CLI-аргументы команды."""
        parser.add_argument("problem", type=str, help="Имя задачи набора или путь")
        parser.add_argument(
            "--write",
            action="store_true",
            help="Записать файл эталонных корней",
        )
        parser.add_argument(
            "--grid",
            type=int,
            default=None,
            help="Узлов сетки на ось (по умолчанию зависит от n)",
        )

    def handle(self, *args, **opts) -> None:
        """Найти корни и (опционально) записать их."""
        try:
            entry = resolve_problem(opts["problem"])
            grid = opts["grid"] or GRID_POINTS.get(entry.problem.n)
            roots = oracle_roots(entry.problem, grid)
        except NesError as exc:
            raise CommandError(str(exc)) from exc

        self.stdout.write(
            self.style.MIGRATE_HEADING(f"{entry.name}: найдено корней {len(roots)}")
        )
        for i, root in enumerate(roots, start=1):
            coords = ", ".join(f"{v:.12f}" for v in root)
            self.stdout.write(f"{i:>3}. ({coords})")

        nor = entry.problem.nor
        if isinstance(nor, int) and nor != len(roots):
            self.stdout.write(
                self.style.WARNING(f"Ожидалось {nor} корней, найдено {len(roots)}.")
            )
        if opts["write"]:
            if isinstance(nor, int) and nor != len(roots):
                raise CommandError("Файл не записан: число корней не совпадает.")
            path = write_fixture(fixture_path(entry.name), entry.problem, roots, grid)
            self.stdout.write(self.style.SUCCESS(f"Записано: {path}"))
