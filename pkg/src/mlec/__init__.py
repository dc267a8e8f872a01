"""Multi-level error correction: codes, geometry, energy allocation and simulation."""

__version__ = "0.1.0"
