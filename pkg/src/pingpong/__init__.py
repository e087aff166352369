"""Simulator for the two-bit ping-pong quantum direct communication protocol."""
from . import adversary, analysis, auth, codec, protocol, qstate

__version__ = "0.1.0"
