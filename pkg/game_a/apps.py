from django.apps import AppConfig


class GameAConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'game_a'
