"""Small numeric helpers shared across modules."""

from __future__ import annotations

import numpy as np

# Open-interval guard for Beta draws destined for log1p(-x) / log(x).
_TINY = 1e-12


def clip_open_unit(x):
    """Clamp values into the open interval (0, 1)."""
    return np.clip(x, _TINY, 1.0 - _TINY)


def tail_sums(m, axis=-1):
    """Exclusive reverse cumulative sums: out[..., l] = sum over s > l of m[..., s]."""
    m = np.asarray(m)
    rev = np.flip(np.cumsum(np.flip(m, axis=axis), axis=axis), axis=axis)
    return rev - m


def exclusive_cumsum(x, axis=-1):
    """Prefix sums excluding the current entry: out[..., l] = sum over s < l."""
    x = np.asarray(x)
    return np.cumsum(x, axis=axis) - x


def fractions_to_weights(fractions, axis=-1):
    """Stick weights from fractions: w_h = f_h * prod_{l<h}(1 - f_l).

    The running products are accumulated as sums of log1p(-f), which stays
    accurate when many near-one factors pile up.  Returns (weights, leftover)
    where leftover = prod(1 - f) is the mass beyond the last stick.
    """
    f = np.asarray(fractions, dtype=float)
    log_keep = np.log1p(-f)
    prefix = exclusive_cumsum(log_keep, axis=axis)
    weights = f * np.exp(prefix)
    leftover = np.exp(np.sum(log_keep, axis=axis))
    return weights, leftover
