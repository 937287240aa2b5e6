from django.core.management.base import BaseCommand, CommandError

from nes.services.exceptions import NesError
from nes.services.experiment import compare, rank, read_summary


class Command(BaseCommand):
    help = (
        "Тест Уилкоксона (--wilcoxon A B) или ранги Фридмана "
        "(--friedman A B C ...) по средним значениям из summary.csv."
    )

    def add_arguments(self, parser) -> None:
        parser.add_argument(
            "--summary",
            default="out/summary.csv",
            help="Путь до summary.csv",
        )
        group = parser.add_mutually_exclusive_group(required=True)
        group.add_argument("--wilcoxon", nargs=2, metavar=("A", "B"))
        group.add_argument("--friedman", nargs="+", metavar="ALG")
        parser.add_argument("--indicator", default="igd")
        parser.add_argument(
            "--maximize",
            action="store_true",
            help="Больше — лучше (для nof, rr, sr)",
        )

    def handle(self, *args, **opts) -> None:
        indicator = opts["indicator"]
        try:
            summary = read_summary(opts["summary"])
            if opts["wilcoxon"]:
                a, b = opts["wilcoxon"]
                result = compare(summary, a, b, indicator)
            else:
                ranks = rank(
                    summary, opts["friedman"], indicator, minimize=not opts["maximize"]
                )
        except NesError as exc:
            raise CommandError(str(exc)) from exc

        if opts["wilcoxon"]:
            self.stdout.write(
                self.style.MIGRATE_HEADING(f"Уилкоксон: {a} vs {b} ({indicator})")
            )
            kind = "точное" if result.exact else "нормальное приближение"
            self.stdout.write(f"Задач: {result.n}")
            self.stdout.write(f"R+ = {result.r_plus:g}, R- = {result.r_minus:g}")
            self.stdout.write(f"p = {result.p_value:.6g} ({kind})")
            return

        self.stdout.write(
            self.style.MIGRATE_HEADING(f"Средние ранги Фридмана ({indicator})")
        )
        for algorithm, value in ranks.sort_values(kind="stable").items():
            self.stdout.write(f"{algorithm:>11}: {value:.4f}")
