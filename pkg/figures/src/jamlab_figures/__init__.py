"""Publication-style figures from jamlab CSV outputs.

The renderer consumes only the CSV files written by the jamlab CLI; it
never calls the simulation code directly.
"""

from jamlab_figures.jobs import FigureJob, SchemaError, parse_jobfile
from jamlab_figures.render import render

__all__ = ["FigureJob", "SchemaError", "parse_jobfile", "render"]
