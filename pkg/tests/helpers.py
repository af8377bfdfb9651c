"""Shared builders for random test images."""

import numpy as np

from qradon import SquareImage, StripImage, forward


def rand_square(rng, n, lo=-9, hi=10, dtype=np.int64):
    side = 1 << n
    if dtype == np.int64:
        return SquareImage(n, rng.integers(lo, hi, size=(side, side)))
    return SquareImage(n, rng.uniform(-1.0, 1.0, size=(side, side)))


def rand_strip(rng, n, h_lo, h_hi, lo=-9, hi=10, dtype=np.int64, kind="sino"):
    shape = (h_hi - h_lo, 1 << n)
    if dtype == np.int64:
        data = rng.integers(lo, hi, size=shape)
    else:
        data = rng.uniform(-1.0, 1.0, size=shape)
    return StripImage(n, h_lo, h_hi, kind, data)


def valid_sino(rng, n, dtype=np.int64):
    return forward(rand_square(rng, n, dtype=dtype))
