"""Superpixel-based deforestation classification study toolkit."""

__version__ = "0.1.0"
