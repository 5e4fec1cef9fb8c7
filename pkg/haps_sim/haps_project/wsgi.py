"""
WSGI config for haps_project.

Serves the read-only sweep results API.
"""
import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'haps_project.settings')

application = get_wsgi_application()
