from django.apps import AppConfig


class CsiConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'csi'
