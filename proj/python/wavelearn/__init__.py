"""Python bindings for the wavelearn C++ core."""

from ._wavelearn import (
    ConfigError,
    DimensionError,
    __version__,
    aclr_db,
    baseline_rate,
    cli,
    config_hash,
    filter_time,
    parse_config,
    qam_gray,
    run_suite,
    windowed_rrc,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "__version__",
    "aclr_db",
    "baseline_rate",
    "cli",
    "config_hash",
    "filter_time",
    "parse_config",
    "qam_gray",
    "run_suite",
    "windowed_rrc",
]
