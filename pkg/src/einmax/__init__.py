"""Exact interaction symbols of coupled gravitational and electromagnetic plane waves, plus
numerical companions: light-cone variety search, a weak-field wave simulator and causal geometry."""

__version__ = "0.1.0"
