"""Batched scalar kernels with a compiled backend and a NumPy fallback.

The Cython extension is used when it was built and ``COOPISAC_PURE_PYTHON``
is unset; otherwise the NumPy versions are used. Both expose the same three
functions.
"""
import os

BACKEND = "python"

if not os.environ.get("COOPISAC_PURE_PYTHON"):
    try:
        from ._ckernels import block_threshold, box_halfspace_multipliers, power_multipliers

        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

if BACKEND == "python":
    from ._pykernels import block_threshold, box_halfspace_multipliers, power_multipliers

__all__ = ["BACKEND", "block_threshold", "box_halfspace_multipliers", "power_multipliers"]
