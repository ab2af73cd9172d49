"""Threaded execution of compiled plans."""
from .channels import DEFAULT_CAPACITY, Channel, ChannelClosed, combine, drain
from .pipeline import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, Pipeline, RuntimeConfig, run_pipeline, write_summary
from .sinks import CallbackSink, SinkError, StreamSink, TcpSink, open_sink

__all__ = [
    "DEFAULT_CAPACITY", "Channel", "ChannelClosed", "combine", "drain",
    "EXIT_CONFIG", "EXIT_OK", "EXIT_RUNTIME", "Pipeline", "RuntimeConfig", "run_pipeline", "write_summary",
    "CallbackSink", "SinkError", "StreamSink", "TcpSink", "open_sink",
]
