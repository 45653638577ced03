"""Tiny pure-interpreter target library for end-to-end exercising of the
fuzzing engine; no real numerics, just strict argument validation.

Known gap kept on purpose: `layers.Dropout` skips its documented range check
on `rate`, so boundary probes against it slip through.
"""

from . import layers
from .model import Model

__all__ = ["Model", "layers"]
