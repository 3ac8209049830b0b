"""Hierarchical spectrum-sharing beamforming toolkit for satellite/aerial/terrestrial networks."""

__version__ = "0.3.0"
