"""Monte Carlo simulator of asynchronous random access with time diversity.

Two-phase replica detection (sync-word correlation, slot-compatible
full-packet matching), MRC combining with successive interference
cancellation, and the metrics that go with it.
"""

from .params import SystemConfig, DerivedParams, derive, standard_sync_word

__all__ = ["SystemConfig", "DerivedParams", "derive", "standard_sync_word"]
