"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``FLOATSYNTH_PURE=1`` to force
the pure-Python kernels (same results, slower).
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("FLOATSYNTH_PURE") != "1":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

uniforms = _impl.uniforms
sample_plan = _impl.sample_plan
sample_chain = _impl.sample_chain
norm_solve = _impl.norm_solve
band_join = _impl.band_join
sde_reduce = _pykernels.sde_reduce
mix64 = _pykernels.mix64
stream_state = _pykernels.stream_state
