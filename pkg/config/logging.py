import logging
import sys
from typing import Optional

from config.settings import get_app_settings

_configured = False


def setup_logging(level: Optional[str] = None) -> None:
    """Configure the root logger once; later calls only adjust the level."""
    global _configured
    settings = get_app_settings()
    resolved = (level or settings.LOG_LEVEL).upper()

    root = logging.getLogger()
    if not _configured:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(settings.LOG_FORMAT))
        root.addHandler(handler)
        _configured = True
    root.setLevel(resolved)
