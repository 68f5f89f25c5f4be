"""FastAPI service exposing the pipeline and twin query endpoints."""

from .app import create_app

__all__ = ["create_app"]
