"""NumPy reference implementations of the convolution kernels.

These define the semantics; the compiled extension must agree with them
to float32 round-off. Time positions outside the input are zeros, the
left padding is (w-1)//2 and the output length is supplied by the caller
(always ceil(T/stride) in this package).
"""

import numpy as np


def _tap_positions(t_out, stride, left_pad, tap):
    return np.arange(t_out) * stride - left_pad + tap


def conv1d_forward(x, kernel, stride, left_pad, t_out):
    """Cross-correlate x (T x d_in) with kernel (w x d_in x d_out) along time."""
    t_in = x.shape[0]
    w, _, d_out = kernel.shape
    out = np.zeros((t_out, d_out), dtype=np.float32)
    for j in range(w):
        pos = _tap_positions(t_out, stride, left_pad, j)
        ok = (pos >= 0) & (pos < t_in)
        if not ok.any():
            continue
        out[ok] += x[pos[ok]] @ kernel[j]
    return out


def conv1d_input_grad(grad_out, kernel, stride, left_pad, t_in):
    """Adjoint of conv1d_forward with respect to the input."""
    t_out = grad_out.shape[0]
    w, d_in, _ = kernel.shape
    gx = np.zeros((t_in, d_in), dtype=np.float32)
    for j in range(w):
        pos = _tap_positions(t_out, stride, left_pad, j)
        ok = (pos >= 0) & (pos < t_in)
        if not ok.any():
            continue
        # pos is strictly increasing for a fixed tap, so no duplicate rows
        gx[pos[ok]] += grad_out[ok] @ kernel[j].T
    return gx


def conv1d_kernel_grad(x, grad_out, w, stride, left_pad):
    """Adjoint of conv1d_forward with respect to the kernel."""
    t_in, d_in = x.shape
    t_out, d_out = grad_out.shape
    gk = np.zeros((w, d_in, d_out), dtype=np.float32)
    for j in range(w):
        pos = _tap_positions(t_out, stride, left_pad, j)
        ok = (pos >= 0) & (pos < t_in)
        if not ok.any():
            continue
        gk[j] = x[pos[ok]].T @ grad_out[ok]
    return gk
