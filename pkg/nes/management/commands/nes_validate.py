from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from nes.services.exceptions import NesError
from nes.services.problem_file import parse_problem_file
from nes.services.reduction import validate_scheme


class Command(BaseCommand):
    help = "Проверяет файл задачи: разбор уравнений и схему редукции."

    def add_arguments(self, parser) -> None:
        parser.add_argument("path", type=str, help="Путь до файла .nes")

    def handle(self, *args, **opts) -> None:
        path = Path(opts["path"])
        if not path.exists():
            raise CommandError(f"Файл не найден: {path}")
        try:
            problem, scheme = parse_problem_file(
                path.read_text(encoding="utf-8"), validate=False
            )
        except NesError as exc:
            raise CommandError(f"{path}: {exc}") from exc

        self.stdout.write(self.style.MIGRATE_HEADING(problem.name))
        self.stdout.write(f"n = {problem.n}, m = {problem.m}, nor = {problem.nor}")
        if scheme is None:
            self.stdout.write(self.style.WARNING("Схема редукции не задана."))
            return

        self.stdout.write(f"q = {scheme.q}, p = {scheme.p}")
        violations = validate_scheme(problem, scheme)
        for v in violations:
            self.stdout.write(self.style.ERROR(f"[{v.code}] {v.message}"))
        if violations:
            raise CommandError(f"Нарушений схемы: {len(violations)}")
        self.stdout.write(self.style.SUCCESS("Схема редукции корректна."))
