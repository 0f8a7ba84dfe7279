"""Gait index estimation from skeleton sequences with per-axis LSTM autoencoders."""

__version__ = "0.1.0"
