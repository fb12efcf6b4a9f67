"""Transient cut-element level-set optimization of vibroacoustic duct filters."""

__version__ = "0.1.0"
