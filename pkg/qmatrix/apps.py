from django.apps import AppConfig


class QmatrixConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'qmatrix'
