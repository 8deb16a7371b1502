"""Mask-guided semantic image editing: models, training, metrics, service."""

__version__ = "0.1.0"
