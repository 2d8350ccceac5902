"""Configuration module for weakminty."""

from weakminty.config.settings import WeakMintySettings, settings

__all__ = ["WeakMintySettings", "settings"]
