"""Semantic-functional communication (SFC) for event-triggered alarms: simulation and analysis."""

__version__ = "0.1.0"
