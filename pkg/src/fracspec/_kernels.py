"""Backend selection for the hot loops.

The compiled Cython module is used when it was built; otherwise, or when the
environment variable ``FRACSPEC_PURE_PYTHON`` is set to a non-empty value,
the numpy versions are used. Both accept and return the same arrays.
"""

import os

import numpy as np

from fracspec import _pykernels

if os.environ.get("FRACSPEC_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from fracspec import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"


def _split(values, fn, *args):
    """Apply a real-valued row kernel to complex input, component-wise."""
    values = np.asarray(values)
    if np.iscomplexobj(values):
        re, n_re = fn(np.ascontiguousarray(values.real), *args)
        im, _ = fn(np.ascontiguousarray(values.imag), *args)
        return re + 1j * im, n_re
    return fn(np.ascontiguousarray(values, dtype=float), *args)


def _caputo_real(g, conv, far, impl):
    out = np.empty_like(g)
    impl.caputo_rows(g, conv, far, out)
    return out, g.shape[1]


def _shift_real(f, shift, order, impl):
    out = np.empty_like(f)
    n_valid = impl.shifted_difference_rows(f, float(shift), int(order), out)
    return out, int(n_valid)


def caputo_rows(g, conv, far, impl=None):
    """Product-integration sums along the last axis of a 2-D array."""
    impl = impl or _impl
    conv = np.ascontiguousarray(conv, dtype=float)
    far = np.ascontiguousarray(far, dtype=float)
    out, _ = _split(g, _caputo_real, conv, far, impl)
    return out


def shifted_difference_rows(f, shift, order, impl=None):
    """Interpolated forward difference along the last axis; returns (diff, n_valid)."""
    impl = impl or _impl
    return _split(f, _shift_real, shift, order, impl)


def duhamel_march(decay, w_prev, w_next, forcing, impl=None):
    """Run the exponential-integrator recursion for every frequency column."""
    impl = impl or _impl
    decay, w_prev, w_next = (
        np.ascontiguousarray(a, dtype=complex) for a in (decay, w_prev, w_next)
    )
    forcing = np.ascontiguousarray(forcing, dtype=complex)
    out = np.empty_like(forcing)
    impl.duhamel_march(decay, w_prev, w_next, forcing, out)
    return out
