"""
Utility modules for flatsonium.
"""

from .output import (
    OutputError,
    format_number,
    write_gnuplot_script,
    write_notes,
    write_table,
)
from .parallel import parallel_map, resolve_workers

__all__ = [
    "OutputError",
    "format_number",
    "write_gnuplot_script",
    "write_notes",
    "write_table",
    "parallel_map",
    "resolve_workers",
]
