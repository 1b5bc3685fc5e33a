"""Seeded discrete-event simulation of p-allocation and JmSW(p) routing."""
from .engine import (
    SAMPLE_COLUMNS,
    SAMPLE_DTYPE,
    MetricsReport,
    QueueBased,
    SimConfig,
    SplitEpisode,
    WorkloadBased,
    busy_front_distribution,
    detect_split,
    measure_overflow_rate,
    read_samples_csv,
    simulate,
    write_samples_csv,
)
from .streams import STREAM_NAMES, spawn_generators

__all__ = [
    "SAMPLE_COLUMNS", "SAMPLE_DTYPE", "STREAM_NAMES", "MetricsReport", "QueueBased", "SimConfig", "SplitEpisode",
    "WorkloadBased", "busy_front_distribution", "detect_split", "measure_overflow_rate",
    "read_samples_csv", "simulate", "spawn_generators", "write_samples_csv",
]
