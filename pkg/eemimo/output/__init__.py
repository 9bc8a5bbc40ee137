"""Persistence helpers for results."""

from .files import save_dataframe, save_json, save_layout

__all__ = ["save_dataframe", "save_json", "save_layout"]
