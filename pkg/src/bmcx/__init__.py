"""Planar Brownian motion and complex analysis laboratory."""
import os

# the default TBB layer is not always present; OpenMP and workqueue are
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

__version__ = "0.1.0"
