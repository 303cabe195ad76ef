#!/usr/bin/env python
"""
Command-line entry point for the PINN benchmark project.

    python manage.py train --benchmark shm --complexity 1
    python manage.py sweep --config sweeps/shm.cfg --workers 4
    python manage.py reference --benchmark heat --complexity 16
    python manage.py trace --checkpoint results/run.params --probes 64
    python manage.py summarize --in results/sweep.csv
    python manage.py test --exclude-tag slow
"""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'pinn_project.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
