"""Inverse scattering, N-solitons and long-time asymptotics for the Sasa-Satsuma equation."""
__version__ = "0.1.0"

from .fields import ComplexField, ReflectionCoefficient, ScatteringData  # noqa: E402,F401
