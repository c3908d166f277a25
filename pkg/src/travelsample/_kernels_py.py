"""Numpy implementations of the hot loops, used when the extension is absent."""
import numpy as np


def group_moments(codes, values, n_groups):
    """Per-group count, mean and sum of squared deviations (two-pass)."""
    codes = np.asarray(codes, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    if codes.shape != values.shape:
        raise ValueError("codes and values differ in length")
    if codes.size and (codes.min() < 0 or codes.max() >= n_groups):
        raise IndexError("group code out of range")
    counts = np.bincount(codes, minlength=n_groups).astype(np.int64)
    sums = np.bincount(codes, weights=values, minlength=n_groups)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = sums / counts
    dev = values - means[codes]
    m2 = np.bincount(codes, weights=dev * dev, minlength=n_groups)
    means[counts == 0] = np.nan
    return counts, means, m2


def tabulate_sampled(sampled, trip_household, trip_cell, trip_weight, n_cells, expansion):
    """Expanded cell totals over trips whose household is in the sample."""
    if not (len(trip_household) == len(trip_cell) == len(trip_weight)):
        raise ValueError("trip arrays differ in length")
    keep = np.asarray(sampled, dtype=bool)[trip_household]
    out = np.bincount(trip_cell[keep], weights=trip_weight[keep], minlength=n_cells)
    return out * expansion


def sample_mask(chosen, n_units):
    mask = np.zeros(n_units, dtype=np.uint8)
    mask[chosen] = 1
    return mask
