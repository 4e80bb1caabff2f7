"""Rule-driven MCU peripheral emulation."""

__version__ = "0.1.0"
