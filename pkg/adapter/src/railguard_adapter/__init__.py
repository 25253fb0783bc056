"""Bridge between video files and the railguard detection wire format.

Runs an off-the-shelf detector over a video, applying frame resampling and
intensity normalization on the way, and emits wire-format lines. The engine
is consumed only through that wire format; this package never imports it.
"""

from .adapter import AdapterConfig, run_adapter
from .resample import resample_indices

__version__ = "0.1.0"
