"""Static figures from zetalab experiment output files."""

__version__ = "0.1.0"

from .figures import FIGURE_KINDS, FigureSpec, render
from .schema import REQUIRED_COLUMNS, SchemaMismatch, load_table, read_rows

__all__ = [
    "FIGURE_KINDS",
    "FigureSpec",
    "REQUIRED_COLUMNS",
    "SchemaMismatch",
    "load_table",
    "read_rows",
    "render",
]
