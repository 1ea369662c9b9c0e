"""FastAPI surface wrapping the engine: mesh evaluation, rendering,
novelty comparison, benchmark ratings, and full refinement runs."""

from .app import create_app

__all__ = ["create_app"]
