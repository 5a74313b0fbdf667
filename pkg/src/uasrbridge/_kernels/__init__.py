"""Time-axis convolution kernels, the hot loops of every model here.

A compiled Cython extension is preferred when it built successfully;
otherwise the NumPy reference implementation is selected at import.
Set UASRBRIDGE_FORCE_FALLBACK=1 to force the NumPy path (used by the
kernel benchmark and the cross-backend agreement tests).
"""

import os

if os.environ.get("UASRBRIDGE_FORCE_FALLBACK") == "1":
    from .fallback import conv1d_forward, conv1d_input_grad, conv1d_kernel_grad

    BACKEND = "numpy"
else:
    try:
        from ._convkernels import (
            conv1d_forward,
            conv1d_input_grad,
            conv1d_kernel_grad,
        )

        BACKEND = "compiled"
    except ImportError:
        from .fallback import conv1d_forward, conv1d_input_grad, conv1d_kernel_grad

        BACKEND = "numpy"

__all__ = ["conv1d_forward", "conv1d_input_grad", "conv1d_kernel_grad", "BACKEND"]
