"""Geometry-to-drag surrogate toolkit: mesh -> SDF -> augmentation -> 3D-CNN -> evaluation."""

__version__ = "0.1.0"
