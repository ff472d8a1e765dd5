"""Hot-loop kernels with a compiled backend selected at import.

The Cython extension ``fklab._kernels`` is used when it was built; otherwise,
or when the environment variable ``FKLAB_PURE_PYTHON`` is set to a non-empty
value, the pure-Python implementation in ``fklab._kernels_py`` is used.
Both return identical integer tables.
"""
import os

import numpy as np

from . import _kernels_py

if os.environ.get("FKLAB_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"
    else:
        BACKEND = "cython"


def closed_walk_counts(neighbor_table, degrees, adjacency, occ, kmax, backend=None):
    """Count closed nearest-neighbour walks by length and number of empty sites.

    A walk is an ordered site sequence ``(x_1, ..., x_k)`` with consecutive sites
    adjacent and ``x_k`` adjacent to ``x_1``; every start site is counted.

    Parameters
    ----------
    neighbor_table : (n, z) int array
        Neighbour indices per site, padded arbitrarily beyond ``degrees[x]``.
    degrees : (n,) int array
    adjacency : (n, n) array
        Nonzero where two sites are nearest neighbours.
    occ : (n,) array of 0/1
    kmax : int
        Longest walk length counted.
    backend : {"cython", "python"}, optional
        Override the import-time selection.

    Returns
    -------
    counts : (kmax + 1, kmax + 1) int64 array
        ``counts[k, m]`` is the number of closed walks of length ``k`` visiting
        ``m`` empty sites (with multiplicity).
    """
    impl = _impl
    if backend == "python":
        impl = _kernels_py
    elif backend == "cython":
        from . import _kernels as impl
    elif backend is not None:
        raise ValueError(f"unknown backend {backend!r}")
    return impl.closed_walk_counts(
        np.ascontiguousarray(neighbor_table, dtype=np.intc),
        np.ascontiguousarray(degrees, dtype=np.intc),
        np.ascontiguousarray(adjacency, dtype=np.uint8),
        np.ascontiguousarray(occ, dtype=np.uint8),
        int(kmax),
    )


def compiled_available() -> bool:
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True
