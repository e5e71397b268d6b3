"""Bacon-Shor subsystem codes, fault-tolerant gadgets and threshold lower bounds."""

__version__ = "0.1.0"
