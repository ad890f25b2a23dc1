"""Frequency-domain correlations with an all-ones box filter.

Both operations convolve with a ``side x side`` ones kernel (a symmetric
filter, so correlation equals convolution) using zero-padded real FFTs.
The padded size is the next fast composite length >= ``dim + side - 1`` and
the transformed kernel is cached per (padded shape, side), so repeated calls
inside solver loops only pay for the data transforms.  Arithmetic cost is
independent of ``side``.

Inputs may carry leading batch axes; the transform runs over the last two.
"""

from __future__ import annotations

import threading

import numpy as np
from scipy import fft as spfft

_kernel_cache: dict[tuple[int, int, int], np.ndarray] = {}
_cache_lock = threading.Lock()


def _padded_shape(h: int, w: int, side: int) -> tuple[int, int]:
    return (spfft.next_fast_len(h + side - 1, real=True),
            spfft.next_fast_len(w + side - 1, real=True))


def _kernel_fft(fshape: tuple[int, int], side: int) -> np.ndarray:
    key = (fshape[0], fshape[1], side)
    k = _kernel_cache.get(key)
    if k is None:
        with _cache_lock:
            k = _kernel_cache.get(key)
            if k is None:
                k = spfft.rfft2(np.ones((side, side)), s=fshape)
                _kernel_cache[key] = k
    return k


def _box_convolve_full(a: np.ndarray, side: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    h, w = a.shape[-2:]
    fshape = _padded_shape(h, w, side)
    spec = spfft.rfft2(a, s=fshape, axes=(-2, -1))
    spec *= _kernel_fft(fshape, side)
    out = spfft.irfft2(spec, s=fshape, axes=(-2, -1))
    return out[..., : h + side - 1, : w + side - 1]


def box_correlate_full(a: np.ndarray, side: int) -> np.ndarray:
    """Full-mode correlation of ``a`` (..., h, w) with a ``side``-box filter.

    Output spatial shape is ``(h + side - 1, w + side - 1)``; entry ``(r, c)``
    sums ``a`` over the box positions that cover it.
    """
    return _box_convolve_full(a, side)


def box_correlate_valid(a: np.ndarray, side: int) -> np.ndarray:
    """Valid-mode correlation: sums of every fully-contained ``side x side`` box.

    Output spatial shape is ``(h - side + 1, w - side + 1)``, indexed by the
    box's top-left corner.
    """
    h, w = np.asarray(a).shape[-2:]
    if side > min(h, w):
        raise ValueError(f"box side {side} exceeds array extent {h}x{w}")
    full = _box_convolve_full(a, side)
    return full[..., side - 1: h, side - 1: w]
