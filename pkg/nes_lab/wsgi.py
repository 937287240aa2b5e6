"""
WSGI-точка входа nes_lab (админка с сохранёнными экспериментами).
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "nes_lab.settings")

application = get_wsgi_application()
