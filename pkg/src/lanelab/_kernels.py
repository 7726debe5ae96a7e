"""Pointwise and reduction kernels used in the inner loops.

Each kernel has a numba implementation and a pure-numpy one. The numba path is
used when numba imports cleanly and ``LANELAB_DISABLE_NUMBA`` is unset or "0".
Both paths must agree to round-off; ``tests/test_kernels.py`` checks that.
"""
import os

import numpy as np

_disabled = os.environ.get("LANELAB_DISABLE_NUMBA", "0") not in ("", "0")

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None


# --- numpy reference implementations -------------------------------------

def signed_power_np(u, p):
    return np.copysign(np.abs(u) ** p, u) if p != 1.0 else u.copy()


def abs_power_sum_np(f, s):
    if s == 2.0:
        return float(np.sum(f * f))
    return float(np.sum(np.abs(f) ** s))


def advect_np(u, v, wx, wy):
    return u * wx + v * wy


def count_above_np(values, levels):
    flat = np.sort(values.ravel())
    return (flat.size - np.searchsorted(flat, levels, side="right")).astype(np.int64)


def sorted_l1_np(a, b):
    return float(np.sum(np.abs(np.sort(a.ravel()) - np.sort(b.ravel()))))


NUMPY = {
    "signed_power": signed_power_np,
    "abs_power_sum": abs_power_sum_np,
    "advect": advect_np,
    "count_above": count_above_np,
    "sorted_l1": sorted_l1_np,
}


# --- numba implementations -------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _abs_pow(x, p):
        # exact shortcuts for the exponents the solvers use most; pow otherwise
        a = abs(x)
        if p == 2.0:
            return a * a
        if p == 3.0:
            return a * a * a
        if p == 1.5:
            return a * np.sqrt(a)
        if p == 2.5:
            return a * a * np.sqrt(a)
        return a**p

    @numba.njit(cache=True)
    def _signed_power_nb(u, p):
        flat = u.ravel()
        out = np.empty_like(flat)
        if p == 1.0:
            out[:] = flat
        else:
            for i in range(flat.size):
                x = flat[i]
                out[i] = np.copysign(_abs_pow(x, p), x)
        return out.reshape(u.shape)

    def signed_power_nb(u, p):
        return _signed_power_nb(np.ascontiguousarray(u, dtype=np.float64), float(p))

    @numba.njit(cache=True)
    def _abs_power_sum_nb(f, s):
        flat = f.ravel()
        acc = 0.0
        if s == 2.0:
            for i in range(flat.size):
                acc += flat[i] * flat[i]
        else:
            for i in range(flat.size):
                acc += _abs_pow(flat[i], s)
        return acc

    def abs_power_sum_nb(f, s):
        return float(_abs_power_sum_nb(np.ascontiguousarray(f, dtype=np.float64), float(s)))

    @numba.njit(cache=True)
    def _advect_nb(u, v, wx, wy):
        n0, n1 = u.shape
        out = np.empty((n0, n1))
        for i in range(n0):
            for j in range(n1):
                out[i, j] = u[i, j] * wx[i, j] + v[i, j] * wy[i, j]
        return out

    def advect_nb(u, v, wx, wy):
        return _advect_nb(u, v, wx, wy)

    @numba.njit(cache=True)
    def _count_above_nb(sorted_vals, levels):
        m = sorted_vals.size
        out = np.empty(levels.size, dtype=np.int64)
        for k in range(levels.size):
            a = levels[k]
            lo, hi = 0, m
            while lo < hi:  # first index with value > a
                mid = (lo + hi) // 2
                if sorted_vals[mid] <= a:
                    lo = mid + 1
                else:
                    hi = mid
            out[k] = m - lo
        return out

    def count_above_nb(values, levels):
        flat = np.sort(np.ascontiguousarray(values, dtype=np.float64).ravel())
        return _count_above_nb(flat, np.ascontiguousarray(levels, dtype=np.float64))

    @numba.njit(cache=True)
    def _sorted_l1_nb(sa, sb):
        acc = 0.0
        for i in range(sa.size):
            acc += abs(sa[i] - sb[i])
        return acc

    def sorted_l1_nb(a, b):
        # numpy's vectorized sort beats numba's; only the reduction is compiled
        return float(_sorted_l1_nb(np.sort(np.asarray(a, dtype=np.float64), axis=None),
                                   np.sort(np.asarray(b, dtype=np.float64), axis=None)))

    NUMBA = {
        "signed_power": signed_power_nb,
        "abs_power_sum": abs_power_sum_nb,
        "advect": advect_nb,
        "count_above": count_above_nb,
        "sorted_l1": sorted_l1_nb,
    }
else:  # pragma: no cover
    NUMBA = None


BACKEND = "numba" if (HAVE_NUMBA and not _disabled) else "numpy"
_active = NUMBA if BACKEND == "numba" else NUMPY

signed_power = _active["signed_power"]
abs_power_sum = _active["abs_power_sum"]
advect = _active["advect"]
count_above = _active["count_above"]
sorted_l1 = _active["sorted_l1"]
