"""Kernel dispatch: numba-compiled hot loops with a pure-numpy fallback.

Set VTINV_NO_NUMBA=1 (or true/yes/on) to force the numpy path; it is also
selected automatically when numba is not importable. Both paths satisfy the
same contracts and agree to floating-point rounding (see tests and
benchmarks/bench_kernels.py).
"""

import os

_flag = os.environ.get("VTINV_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag in {"1", "true", "yes", "on"}

if NUMBA_DISABLED:
    from . import _kernels_numpy as _impl

    USE_NUMBA = False
else:
    try:
        from . import _kernels_numba as _impl

        USE_NUMBA = True
    except ImportError:
        from . import _kernels_numpy as _impl

        USE_NUMBA = False

conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward
maxpool2_forward = _impl.maxpool2_forward
maxpool2_backward = _impl.maxpool2_backward
upsample2_forward = _impl.upsample2_forward
upsample2_backward = _impl.upsample2_backward
