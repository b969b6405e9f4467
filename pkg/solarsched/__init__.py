"""Solar-powered multi-gateway downlink scheduling with Kalman harvest prediction."""

__version__ = "1.0.0"
