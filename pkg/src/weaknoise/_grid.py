"""Backend selection for the grid event sweep.

Prefers the compiled extension, falls back to the numpy reference when it is
not built.  GRID_BACKEND names the active one so tests and benchmarks can
tell which they are exercising.
"""

try:
    from . import _grid_cy as _impl
except ImportError:  # extension not built; the numpy path is always valid
    from . import _grid_py as _impl

from . import _grid_py

GRID_BACKEND = _impl.BACKEND
KIND_C = _grid_py.KIND_C
KIND_Q = _grid_py.KIND_Q

grid_sweep = _impl.grid_sweep
grid_sweep_reference = _grid_py.grid_sweep
