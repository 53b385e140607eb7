"""Segment-level dwell time tracking."""

from ._segtrack import *  # noqa: F401,F403
from ._segtrack import SegtrackError, __doc__  # noqa: F401

__version__ = "1.0.0"
