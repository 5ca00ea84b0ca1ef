"""
Command implementations for the flatsonium CLI.
"""

from . import figures
from . import verification

__all__ = ["figures", "verification"]
