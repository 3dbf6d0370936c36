"""Slice-by-slice unit test generation for MiniLang programs."""

__version__ = "0.1.0"
