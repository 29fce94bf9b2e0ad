"""FastAPI service wrapping the core pipeline stages."""

from .app import app, create_app

__all__ = ["app", "create_app"]
