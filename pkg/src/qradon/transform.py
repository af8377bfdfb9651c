"""Forward single-quadrant transform, back-projection and brute-force oracles.

The forward transform is a composition of stages.  Stage ``m`` pairs up the
width ``2**(m-1)`` sections of an image and replaces each pair ``(f0, f1)``
with the width ``2**m`` section

    g(h, 2t)   = f0(h, t) + f1(h + t, t),
    g(h, 2t+1) = f0(h, t) + f1(h + t + 1, t),

which sums values along digital lines of dyadic slopes.  Back-projection
composes the transposed stages.  Reads outside a window are zero by contract.
"""

from __future__ import annotations

import numpy as np

from .grid import (
    ClipError,
    SquareImage,
    StripImage,
    add_checked,
    embed,
    sum_checked,
)
from .lines import digital_line_closed


# -- stage kernels on raw global arrays (row r <-> height h_lo + r) -----------


def _merge_stage_t(
    arrt: np.ndarray, m: int, scratch: np.ndarray | None, out: np.ndarray | None = None
) -> np.ndarray:
    """One forward stage on the transposed layout (columns, heights).

    The height axis is contiguous so the shifted adds stream cache lines.
    With ``out=None`` the stage runs in place: only the left-section columns
    need saving in ``scratch``, every right-section column is consumed before
    the ascending sweep overwrites it.  Raises if a sum would fall below the
    window.
    """
    N, R = arrt.shape
    w = 1 << m
    half = w >> 1
    integer = arrt.dtype == np.int64
    if out is None:
        L = N // w
        saved = scratch[: L * half * R].reshape(L, half, R)
        np.copyto(saved, arrt.reshape(L, w, R)[:, :half])
        left = lambda t: saved[:, t]
        out = arrt
    else:
        left = lambda t: arrt[t::w]
    for t in range(half):
        c0 = left(t)
        c1 = arrt[half + t :: w]
        if np.any(c1[:, : t + 1]):
            raise ClipError(
                f"stage {m}: sums at slope pair {t} would fall below the window"
            )
        for parity in (0, 1):
            shift = t + parity
            dst = out[2 * t + parity :: w]
            keep = max(R - shift, 0)
            if keep:
                a = c0[:, :keep]
                d = dst[:, :keep]
                np.add(a, c1[:, shift:], out=d)
                # d may alias the second operand; d - a wraps back to it
                if integer and np.any(((a ^ d) & ((d - a) ^ d)) < 0):
                    raise OverflowError("int64 overflow in integer mode")
            dst[:, keep:] = c0[:, keep:]
    return out


def _block_columns(rows: int, itemsize: int, width: int) -> int:
    # largest power-of-two column count whose working set stays cache sized,
    # capped at half the transform width so every size takes the same path
    target = (1 << 20) // max(rows * itemsize, 1)
    cache_cols = 1 << max(target.bit_length() - 1, 1)
    return max(2, min(cache_cols, width >> 1))


def _forward_stages_t(arrt: np.ndarray, m: int, scratch: np.ndarray) -> np.ndarray:
    """Stages 1..m on the transposed layout, blocked for cache locality.

    Stage ``s`` only mixes columns within aligned ``2**s`` blocks, so the low
    stages run in place block by block while each block is cache resident;
    the stages above the block width ping-pong full passes over the array.
    Returns the buffer holding the result.
    """
    base_cols = _block_columns(arrt.shape[1], arrt.itemsize, 1 << m)
    low = min(base_cols.bit_length() - 1, m)
    for start in range(0, arrt.shape[0], base_cols):
        block = arrt[start : start + base_cols]
        for stage in range(1, low + 1):
            _merge_stage_t(block, stage, scratch)
    for stage in range(low + 1, m + 1):
        _merge_stage_t(arrt, stage, scratch)
    return arrt


def _split_fixed(arr: np.ndarray, m: int, rows_out: int) -> np.ndarray:
    """One back-projection stage; output may extend the window at the top."""
    R, N = arr.shape
    w = 1 << m
    half = w >> 1
    out = np.zeros((rows_out, N), dtype=arr.dtype)
    for t in range(half):
        e = arr[:, 2 * t :: w]
        o = arr[:, 2 * t + 1 :: w]
        g0 = out[:, t::w]
        g1 = out[:, half + t :: w]
        k = min(R, rows_out)
        if k:
            g0[:k] = add_checked(e[:k], o[:k])
        ka = min(R, rows_out - t)
        if ka > 0:
            g1[t : t + ka] = e[:ka]
        kb = min(R, rows_out - t - 1)
        if kb > 0:
            g1[t + 1 : t + 1 + kb] = add_checked(g1[t + 1 : t + 1 + kb], o[:kb])
    return out


# -- public operations ---------------------------------------------------------


def merge_pair(f0: StripImage, f1: StripImage) -> StripImage:
    """One forward step on a section pair; output window grows at the bottom."""
    if f0.n != f1.n:
        raise ValueError(f"scale mismatch: n={f0.n} vs n={f1.n}")
    if (f0.h_lo, f0.h_hi) != (f1.h_lo, f1.h_hi):
        raise ValueError("operands must share one window")
    joined = StripImage(
        f0.n + 1, f0.h_lo, f0.h_hi, "sino", np.hstack([f0.data, f1.data])
    )
    return merge_stage(joined, f0.n + 1)


def merge_stage(f: StripImage, m: int) -> StripImage:
    """Apply the stage-``m`` merge to every section pair of ``f``.

    The window grows downward by ``2**(m-1)`` so no sum can be clipped.
    """
    if not 1 <= m <= f.n:
        raise ValueError(f"stage m={m} out of range for n={f.n}")
    half = 1 << (m - 1)
    padded = np.zeros((f.width, f.rows + half), dtype=f.data.dtype)
    padded[:, half:] = f.data.T
    scratch = np.empty((f.width // 2) * (f.rows + half), dtype=f.data.dtype)
    _merge_stage_t(padded, m, scratch)
    return StripImage(
        f.n, f.h_lo - half, f.h_hi, "sino", np.ascontiguousarray(padded.T)
    )


def forward(f: SquareImage) -> StripImage:
    """Single-quadrant transform of a square image.

    The output lives on the window ``[-(N-1), N)`` holding every admissible
    (height, slope) pair; cost is O(N^2 log N).
    """
    return forward_partial(f, f.n) if f.n else StripImage(
        f.n, 0, 1, "sino", f.data.copy()
    )


def forward_partial(f: SquareImage, m: int) -> StripImage:
    """First ``m`` stages only; ``m = 0`` is the plain embedding."""
    if not 0 <= m <= f.n:
        raise ValueError(f"stage m={m} out of range for n={f.n}")
    if m == 0:
        return embed(f)
    N = f.side
    arrt = np.zeros((N, 2 * N - 1), dtype=f.data.dtype)
    arrt[:, N - 1 :] = f.data.T
    scratch = np.empty((N // 2) * (2 * N - 1), dtype=f.data.dtype)
    arrt = _forward_stages_t(arrt, m, scratch)
    return StripImage(f.n, -(N - 1), N, "sino", np.ascontiguousarray(arrt.T))


def forward_bruteforce(f: SquareImage) -> StripImage:
    """Direct per-line summation oracle, O(N^3); no stage machinery."""
    N = f.side
    lo = -(N - 1)
    if N * int(np.max(np.abs(f.data), initial=0)) > np.iinfo(np.int64).max // 2:
        raise OverflowError("line sums may overflow int64")
    out = np.zeros((2 * N - 1, N), dtype=f.data.dtype)
    cols = np.arange(N)
    hs = np.arange(lo, N)
    for s in range(N):
        rise = digital_line_closed(f.n, 0, s).heights
        rows = hs[:, None] + rise[None, :]
        inside = (rows >= 0) & (rows < N)
        vals = np.where(inside, f.data[rows.clip(0, N - 1), cols[None, :]], 0)
        out[:, s] = vals.sum(axis=1)
    return StripImage(f.n, lo, N, "sino", out)


def split_pair(g: StripImage) -> tuple[StripImage, StripImage]:
    """Transpose of :func:`merge_pair`: undo one pairing by co-adding terms."""
    if g.n < 1:
        raise ValueError("need level >= 1 to split")
    half = 1 << (g.n - 1)
    arr = _split_fixed(g.data, g.n, g.rows + half)
    hi = g.h_hi + half
    g0 = StripImage(g.n - 1, g.h_lo, hi, "sino", arr[:, :half].copy())
    g1 = StripImage(g.n - 1, g.h_lo, hi, "sino", arr[:, half:].copy())
    return g0, g1


def backproject(g: StripImage, m: int | None = None) -> StripImage:
    """Back-projection: sums over the dual lines; transpose of the forward.

    Applies the transposed stages from level ``m`` (default ``n``) down to 1.
    """
    if m is None:
        m = g.n
    if not 0 <= m <= g.n:
        raise ValueError(f"stage m={m} out of range for n={g.n}")
    arr = g.data
    hi = g.h_hi
    for stage in range(m, 0, -1):
        half = 1 << (stage - 1)
        arr = _split_fixed(arr, stage, arr.shape[0] + half)
        hi += half
    return StripImage(g.n, g.h_lo, hi, "sino", arr)


_QUADRANT_MAPS = (
    lambda a: a,                 # Q0: the image itself
    lambda a: a.T,               # Q1: transpose
    lambda a: a.T[:, ::-1],      # Q2: transpose then flip columns
    lambda a: a[:, ::-1],        # Q3: flip columns
)


def full_adrt(f: SquareImage) -> tuple[StripImage, StripImage, StripImage, StripImage]:
    """Four quadrant transforms of the dihedral copies of ``f``.

    Quadrant 0 transforms ``f`` itself, 1 its transpose, 2 the column-flipped
    transpose, 3 the column-flipped image.
    """
    return tuple(
        forward(SquareImage(f.n, np.ascontiguousarray(q(f.data))))
        for q in _QUADRANT_MAPS
    )


def slope_mass(g: StripImage, s: int):
    """Total of one sinogram column; each slope carries the image's full mass."""
    return sum_checked(g.data[:, s]).item()
