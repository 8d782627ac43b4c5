"""uavsense-plots: figures from uavsense sweep CSVs and RCS map files."""

__version__ = "0.1.0"

from .io import InputError, MapFile, SweepRow, read_map_file, read_sweep_csv
from .render import KIND_MAPS, KIND_SWEEP, PlotJob, render
