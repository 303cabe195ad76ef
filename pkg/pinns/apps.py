from django.apps import AppConfig


class PinnsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'pinns'
    verbose_name = 'Physics-informed networks'
