from django.apps import AppConfig


class LinksimConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'linksim'
    verbose_name = 'HAPS-LEO Link Simulator'
