"""Plotting front end for repeater-chain optimisation outputs."""

from .render import parse_dot, plot_frontier, plot_heatmap, plot_scheme
from .tables import FrontierTable, Table, TableError

__version__ = "0.1.0"
