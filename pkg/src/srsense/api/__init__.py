"""Command-line scaffolding shared by the srsense tools."""

from srsense.api.base_main import BaseMain

__all__ = ["BaseMain"]
