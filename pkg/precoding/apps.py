from django.apps import AppConfig


class PrecodingConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'precoding'
