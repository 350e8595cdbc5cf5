import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'breatherlab_site.settings')
django.setup()
