"""Three-panel figure renderer for juice benchmark CSV files."""

from .render import (
    CONVERGE_COLUMNS,
    SWEEP_COLUMNS,
    FigError,
    PlotSpec,
    dump_series,
    read_converge,
    read_sweep,
    render,
)

__all__ = [
    "CONVERGE_COLUMNS",
    "SWEEP_COLUMNS",
    "FigError",
    "PlotSpec",
    "dump_series",
    "read_converge",
    "read_sweep",
    "render",
]
