"""
URL configuration for pinn_project.

Only the Django admin is exposed; it lists sweeps recorded with
`python manage.py sweep --record`.
"""
from django.contrib import admin
from django.urls import path

urlpatterns = [
    path('admin/', admin.site.urls),
]
