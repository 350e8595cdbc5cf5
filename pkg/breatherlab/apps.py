import logging
from django.apps import AppConfig

logger = logging.getLogger(__name__)


class BreatherLabConfig(AppConfig):
    name = 'breatherlab'
    verbose_name = 'Breather Lab'

    def ready(self):
        """Called when Django starts up."""
        # Agg must be selected before any pyplot import so SVG output works headless
        import matplotlib
        matplotlib.use('Agg')
        logger.debug(f"Loaded app: {self.name} (matplotlib backend {matplotlib.get_backend()})")
