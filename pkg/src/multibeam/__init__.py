"""Multibeam transmit beamforming for joint communication and sensing with analog arrays."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402

__all__ = ["__version__", "BACKEND"]
