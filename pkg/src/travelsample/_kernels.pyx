# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops; see ``_kernels_py`` for the reference numpy versions.

Every loop accumulates in input order so results are bit-identical to the
fallback.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def group_moments(const cnp.int64_t[::1] codes, const double[::1] values, Py_ssize_t n_groups):
    """Per-group count, mean and sum of squared deviations (two-pass)."""
    cdef Py_ssize_t i, g, n = codes.shape[0]
    cdef double d
    counts_arr = np.zeros(n_groups, dtype=np.int64)
    sums_arr = np.zeros(n_groups, dtype=np.float64)
    m2_arr = np.zeros(n_groups, dtype=np.float64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef double[::1] sums = sums_arr
    cdef double[::1] m2 = m2_arr
    if values.shape[0] != n:
        raise ValueError("codes and values differ in length")
    for i in range(n):
        g = codes[i]
        if g < 0 or g >= n_groups:
            raise IndexError(f"group code {g} out of range")
    with nogil:
        for i in range(n):
            g = codes[i]
            counts[g] += 1
            sums[g] += values[i]
        for g in range(n_groups):
            if counts[g] > 0:
                sums[g] = sums[g] / counts[g]
        for i in range(n):
            g = codes[i]
            d = values[i] - sums[g]
            m2[g] += d * d
    means_arr = sums_arr
    means_arr[counts_arr == 0] = np.nan
    return counts_arr, means_arr, m2_arr


def tabulate_sampled(
    const cnp.uint8_t[::1] sampled,
    const cnp.int64_t[::1] trip_household,
    const cnp.int64_t[::1] trip_cell,
    const double[::1] trip_weight,
    Py_ssize_t n_cells,
    double expansion,
):
    """Expanded cell totals over trips whose household is in the sample."""
    cdef Py_ssize_t i, n = trip_household.shape[0]
    out_arr = np.zeros(n_cells, dtype=np.float64)
    cdef double[::1] out = out_arr
    if trip_cell.shape[0] != n or trip_weight.shape[0] != n:
        raise ValueError("trip arrays differ in length")
    with nogil:
        for i in range(n):
            if sampled[trip_household[i]]:
                out[trip_cell[i]] += trip_weight[i]
        for i in range(n_cells):
            out[i] = out[i] * expansion
    return out_arr


def sample_mask(const cnp.int64_t[::1] chosen, Py_ssize_t n_units):
    """Indicator array of length ``n_units`` with ones at ``chosen``."""
    cdef Py_ssize_t i
    mask_arr = np.zeros(n_units, dtype=np.uint8)
    cdef cnp.uint8_t[::1] mask = mask_arr
    with nogil:
        for i in range(chosen.shape[0]):
            mask[chosen[i]] = 1
    return mask_arr
