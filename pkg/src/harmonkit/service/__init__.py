"""HTTP session API consumed by the review UI and the CLI serve command."""

from .app import create_app

__all__ = ["create_app"]
