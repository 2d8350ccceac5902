"""Utilities module."""

from weakminty.utils.csvio import atomic_write_text, write_rows

__all__ = ["atomic_write_text", "write_rows"]
