"""Energy-aware variable-framerate, variable-preset bitrate ladders for live streaming."""

__version__ = "0.1.0"
