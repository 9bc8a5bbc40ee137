"""Load-adaptive massive MIMO energy-efficiency simulator."""

__version__ = "0.1.0"

from .pipeline import DailyReport, RunConfig, emit, run_daily, sweep

__all__ = ["DailyReport", "RunConfig", "__version__", "emit", "run_daily", "sweep"]
