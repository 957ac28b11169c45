"""Waveguide Heat Inverse Source Toolkit"""

__version__ = "1.0.0"
