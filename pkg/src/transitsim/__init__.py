"""Agent-based rail transit simulator with social event-interest diffusion."""

__version__ = "0.1.0"
