"""HTTP service exposing the toolkit; the ``tsid`` CLI is its client."""

from .app import create_app

__all__ = ["create_app"]
