"""pmwatch: low-cost particulate-matter monitoring toolkit.

Converts dust-sensor low-pulse-occupancy readings into PM2.5 mass
concentrations, classifies them against air-quality index tables, stores
and aggregates channel telemetry behind an HTTP service, validates device
series against reference stations, and forecasts the next reading with a
from-scratch LSTM.
"""

__version__ = "0.1.0"

from . import aqi, forecast, sensing, service, simulate, timeseries, validation  # noqa: F401
from .errors import PmWatchError  # noqa: F401
