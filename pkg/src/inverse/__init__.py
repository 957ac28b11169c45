"""Stability modulus, observability constants, reconstruction and stability sweeps"""
