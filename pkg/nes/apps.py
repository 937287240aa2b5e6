from django.apps import AppConfig


class NesConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "nes"
    verbose_name = "Корни систем нелинейных уравнений"
