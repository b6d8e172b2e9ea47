"""Kernel backend selection: compiled extension when built, numpy otherwise.

Both backends expose ``quad_forms`` and ``weighted_scatter`` with identical
semantics; ``BACKEND`` records which one this process is using.
"""

from . import _py

try:
    from . import _cy as _impl

    BACKEND = "cython"
except ImportError:  # extension not compiled on this install
    _impl = _py
    BACKEND = "python"

quad_forms = _impl.quad_forms
weighted_scatter = _impl.weighted_scatter


def backends():
    """Importable kernel implementations keyed by name (for tests/benchmarks)."""
    table = {"python": _py}
    if _impl is not _py:
        table["cython"] = _impl
    return table
