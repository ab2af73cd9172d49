"""Stream-in/stream-out RDF generation with adaptive windowed joins."""

__version__ = "0.1.0"
