from .config import ApiConfig
from .app import create_app

__all__ = ["ApiConfig", "create_app"]
