"""Exact inversion by backward substitution, and its delta expansion.

One forward stage is inverted by prefix sums of cross-differences of
adjacent-slope columns; composing the stage inverses from the top level down
recovers the image exactly and at the same O(N^2 log N) cost as the forward
transform.  Applied to a single sinogram delta, each stage splits it into two
signed half-line onsets; the depth-n expansion of these (height, slope, sign)
triples describes the inverse of a delta column by column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    SquareImage,
    StripImage,
    cumsum_checked,
    is_integer_mode,
    lincomb,
    make_delta,
    rewindow,
    sub_checked,
    sup_norm,
)
from .transform import merge_stage


class OutOfRangeError(ValueError):
    """The data is not the transform of any square image.

    ``stage`` is the level whose checks first failed; ``record`` is the
    offending ``(kind, m, section, slope, h, value)`` tuple when available.
    """

    def __init__(self, message: str, stage: int | None = None, record=None):
        super().__init__(message)
        self.stage = stage
        self.record = record


# -- signed delta triples and their stage expansion ----------------------------


@dataclass(frozen=True)
class DeltaTriple:
    """A signed sinogram delta: height ``h``, slope ``s``, sign ``sigma``."""

    h: int
    s: int
    sigma: int

    def __post_init__(self):
        if self.sigma not in (1, -1):
            raise ValueError("sigma must be +1 or -1")
        if self.s < 0:
            raise ValueError("slope must be nonnegative")


def split_delta(t: DeltaTriple) -> tuple[DeltaTriple, DeltaTriple]:
    """Children of a delta under one inversion stage.

    Inverting a stage turns a delta at slope ``s`` into two half-line onsets
    at slope ``s//2``: one shifted by the slope parity, one by ``s//2 + 1``,
    with alternating signs.
    """
    half, r = divmod(t.s, 2)
    left = DeltaTriple(t.h + r, half, t.sigma * (-1) ** r)
    right = DeltaTriple(t.h + half + 1, half, t.sigma * (-1) ** (r + 1))
    return left, right


def unsplit_delta(pair: tuple[DeltaTriple, DeltaTriple]) -> DeltaTriple:
    """The unique triple whose split is ``pair``; error if none exists."""
    left, right = pair
    h = right.h - right.s - 1
    s = left.h + 2 * right.h - 3 * h - 2
    if s < 0:
        raise ValueError("pair is not the split of any triple")
    sigma = left.sigma * (-1) ** (s % 2)
    candidate = DeltaTriple(h, s, sigma)
    if split_delta(candidate) != (left, right):
        raise ValueError("pair is not the split of any triple")
    return candidate


@dataclass(frozen=True, eq=False)
class DeltaTree:
    """Depth-``depth`` expansion of a root triple; leaf ``t`` follows the
    branch bits of ``t`` most significant first."""

    root: DeltaTriple
    depth: int
    leaves: tuple[DeltaTriple, ...]

    def heights(self) -> np.ndarray:
        return np.array([leaf.h for leaf in self.leaves], dtype=np.int64)

    def slopes(self) -> np.ndarray:
        return np.array([leaf.s for leaf in self.leaves], dtype=np.int64)

    def signs(self) -> np.ndarray:
        return np.array([leaf.sigma for leaf in self.leaves], dtype=np.int64)


def delta_tree(h: int, s: int, depth: int) -> DeltaTree:
    """Expand a sinogram delta through ``depth`` inversion stages."""
    if not 0 <= s < (1 << depth):
        raise ValueError(f"slope s={s} out of range for depth {depth}")
    root = DeltaTriple(h, s, 1)

    def expand(node: DeltaTriple, d: int) -> list[DeltaTriple]:
        if d == 0:
            return [node]
        left, right = split_delta(node)
        return expand(left, d - 1) + expand(right, d - 1)

    return DeltaTree(root, depth, tuple(expand(root, depth)))


def leaf_closed_form(h: int, s: int, depth: int, t: int) -> DeltaTriple:
    """Leaf ``t`` of :func:`delta_tree` without recursion.

    Branch ``b_k`` (most significant bit of ``t`` first) adds ``s >> k`` plus
    one when taken, else the parity of ``s >> (k-1)``; the sign is minus one
    to the number of bits where ``t`` and ``s`` disagree.
    """
    if not 0 <= t < (1 << depth):
        raise ValueError(f"leaf index t={t} out of range for depth {depth}")
    ht = h
    for k in range(1, depth + 1):
        b = (t >> (depth - k)) & 1
        ht += b * ((s >> k) + 1) + (1 - b) * ((s >> (k - 1)) & 1)
    sigma = -1 if bin(t ^ s).count("1") % 2 else 1
    return DeltaTriple(ht, s >> depth, sigma)


# -- stage inversion kernels ----------------------------------------------------


def _unmerge_fixed(arr: np.ndarray, m: int, rows_out: int | None = None) -> np.ndarray:
    """Invert one stage on the global layout via prefix sums of differences.

    Values above the output window are not materialized; per column they
    settle to the stage's mass imbalance, which is checked separately.
    """
    R, N = arr.shape
    w = 1 << m
    half = w >> 1
    if rows_out is None:
        rows_out = R
    inc = np.zeros((rows_out, N), dtype=arr.dtype)
    for q in range(half):
        e = arr[:, 2 * q :: w]
        o = arr[:, 2 * q + 1 :: w]
        d0 = inc[:, q::w]
        d1 = inc[:, half + q :: w]
        k = min(R, rows_out)
        d0[:k] = e[:k]
        k = min(R, rows_out - 1)
        if k > 0:
            d0[1 : 1 + k] = sub_checked(d0[1 : 1 + k], o[:k])
        k = min(R, rows_out - 1 - q)
        if k > 0:
            d1[1 + q : 1 + q + k] = sub_checked(o[:k], e[:k])
    return cumsum_checked(inc, axis=0)


def pair_differences(g: StripImage, parity: str) -> StripImage:
    """Cross-differences of adjacent-slope columns, one child per parity.

    ``"even"`` yields the increment field of the left child,
    ``g(h+1, 2s) - g(h, 2s+1)``; ``"odd"`` the right child's,
    ``g(h-s, 2s+1) - g(h-s, 2s)``.
    """
    if g.n < 1:
        raise ValueError("need level >= 1")
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    half = 1 << (g.n - 1)
    R = g.rows
    e = g.data[:, 0::2]
    o = g.data[:, 1::2]
    if parity == "even":
        out = np.zeros((R + 1, half), dtype=g.data.dtype)
        out[:R] = e
        out[1:] = sub_checked(out[1:], o)
        return StripImage(g.n - 1, g.h_lo - 1, g.h_hi, "sino", out)
    rows_out = R + half - 1
    out = np.zeros((rows_out, half), dtype=g.data.dtype)
    d = sub_checked(o, e)
    for s in range(half):
        out[s : s + R, s] = d[: min(R, rows_out - s), s]
    return StripImage(g.n - 1, g.h_lo, g.h_lo + rows_out, "sino", out)


def unmerge_pair(
    g: StripImage, h_hi: int | None = None
) -> tuple[StripImage, StripImage]:
    """Invert one merge step: recover the section pair by back-substitution.

    The window must capture all of ``g``'s support; output values settle to
    the per-slope mass imbalance above ``h_hi`` and are not materialized.
    """
    if g.n < 1:
        raise ValueError("need level >= 1 to invert a stage")
    half = 1 << (g.n - 1)
    if h_hi is None:
        h_hi = g.h_hi + half
    rows_out = h_hi - g.h_lo
    if rows_out <= 0:
        raise ValueError("empty output window")
    arr = _unmerge_fixed(g.data, g.n, rows_out)
    g0 = StripImage(g.n - 1, g.h_lo, h_hi, "sino", arr[:, :half].copy())
    g1 = StripImage(g.n - 1, g.h_lo, h_hi, "sino", arr[:, half:].copy())
    return g0, g1


# -- staged residual sweep shared with the range validator ---------------------


def _colsum_checked(x: np.ndarray) -> np.ndarray:
    if x.shape[0] == 0:
        return np.zeros(x.shape[1], dtype=x.dtype)
    return cumsum_checked(x, axis=0)[-1]


def _mass_values(arr: np.ndarray, lo: int, n: int, m: int) -> np.ndarray:
    """Per (section, pair) mass residuals of a level-``m`` global array."""
    w = 1 << m
    half = w >> 1
    out = np.zeros((1 << (n - m), half), dtype=arr.dtype)
    for t in range(half):
        r_even = max(-2 * t - lo, 0)
        r_odd = max(-2 * t - 1 - lo, 0)
        ev = _colsum_checked(arr[r_even:, 2 * t :: w])
        od = _colsum_checked(arr[r_odd:, 2 * t + 1 :: w])
        out[:, t] = sub_checked(ev, od)
    return out


def _under_slot_records(child: np.ndarray, lo: int, n: int, m: int) -> list:
    """Out-of-region values a stage-``m`` inversion must leave at zero.

    For each section pair and child slope ``q``: the left child's ``q`` rows
    just below its admissible bottom, and the right child's ``q`` rows just
    above the square top.
    """
    N = 1 << n
    w = 1 << m
    half = w >> 1
    recs = []
    for ellp in range(1 << (n - m)):
        for q in range(1, half):
            col0 = ellp * w + q
            for h in range(-2 * q, -q):
                recs.append(("support", m, 2 * ellp, q, h, child[h - lo, col0].item()))
            col1 = ellp * w + half + q
            for h in range(N, N + q):
                recs.append(
                    ("support", m, 2 * ellp + 1, q, h, child[h - lo, col1].item())
                )
    return recs


def _entry_violation_records(g: StripImage) -> list:
    """Nonzero values outside the admissible trapezoid ``-s <= h <= N-1``."""
    N = 1 << g.n
    heights = np.arange(g.h_lo, g.h_hi)[:, None]
    slopes = np.arange(N)[None, :]
    outside = (heights < -slopes) | (heights > N - 1)
    rows, cols = np.nonzero(outside & (g.data != 0))
    return [
        ("support", g.n, 0, int(c), int(r) + g.h_lo, g.data[r, c].item())
        for r, c in zip(rows, cols)
    ]


def _project_to_region(arr: np.ndarray, lo: int, n: int, level: int) -> None:
    """Zero everything outside the level's admissible trapezoid, in place.

    A no-op on exact stage outputs of square data; for float data it stops
    out-of-region rounding noise from being re-integrated (and amplified by
    the substitution's polynomial growth) at the following stages.
    """
    N = 1 << n
    heights = np.arange(lo, lo + arr.shape[0])[:, None]
    srem = (np.arange(N) % (1 << level))[None, :]
    keep = (heights >= -srem) & (heights <= N - 1)
    arr[~keep] = 0


def _backward_sweep(g: StripImage, substitute_last: bool):
    """Run the staged inversion, collecting mass and support residuals.

    The working window stays at ``[-(N-1), N)``: each stage extends it
    upward just enough to read the over-the-top slot values, then trims
    back and projects onto the admissible region.  For data in the range
    both steps discard exact zeros only.

    Returns ``(arr, lo, records)`` where ``arr`` is the final global array
    (fully substituted when ``substitute_last``) and each record is a
    ``(kind, m, section, slope, h, value)`` tuple, emitted top level first.
    """
    n = g.n
    N = 1 << n
    lo = -(N - 1)
    arr = rewindow(g, lo, N, clip=True).data.copy()
    _project_to_region(arr, lo, n, n)
    records = []
    for m in range(n, 0, -1):
        mass = _mass_values(arr, lo, n, m)
        for ell in range(mass.shape[0]):
            for t in range(mass.shape[1]):
                records.append(("mass", m, ell, t, None, mass[ell, t].item()))
        if m >= 2:
            half = 1 << (m - 1)
            child = _unmerge_fixed(arr, m, arr.shape[0] + half)
            records.extend(_under_slot_records(child, lo, n, m))
            arr = child[: arr.shape[0]]
            _project_to_region(arr, lo, n, m - 1)
        elif substitute_last:
            arr = _unmerge_fixed(arr, m)
    return arr, lo, records


def default_float_tol(n: int) -> float:
    """Detectability limit of the residual checks on float data.

    Rounding makes float data sit slightly off the range, and the inversion
    amplifies off-range components like the remaining stages' polynomial
    profiles, up to ~(2N)^(n-2); residuals below that scale cannot be told
    apart from conditioning noise (inverting the rounded data in exact
    rational arithmetic leaves errors of the same order).
    """
    N = 1 << n
    eps = float(np.finfo(np.float64).eps)
    return 64 * eps * (n + 1) * max(N, (2 * N) ** max(n - 2, 0))


def _threshold(data: np.ndarray, tol, n: int | None = None):
    """Residual acceptance threshold: absolute for integers, relative to the
    data magnitude for floats."""
    if is_integer_mode(data):
        return int(tol or 0)
    if tol is None:
        tol = default_float_tol(n if n is not None else 0)
    return tol * (1.0 + np.max(np.abs(data), initial=0.0))


# -- the inverse ----------------------------------------------------------------


def inverse(g: StripImage, tol=None, allow_out_of_range: bool = False):
    """Recover the unique square image whose transform is ``g``.

    Backward substitution runs level by level; at each level the per-pair
    mass balance and the values outside the admissible region must vanish
    (within ``tol`` in float mode).  Data failing these checks is not the
    transform of any square image and raises :class:`OutOfRangeError` naming
    the first offending stage.  With ``allow_out_of_range`` the substitution
    runs to completion and the clipped square is returned together with a
    residual report.
    """
    n = g.n
    N = 1 << n
    if g.h_lo < -(N - 1) or g.h_hi > N:
        raise ValueError(
            f"window [{g.h_lo}, {g.h_hi}) extends outside the admissible "
            f"region [{-(N - 1)}, {N})"
        )
    thr = _threshold(g.data, tol, n)
    entry = _entry_violation_records(g)
    if not allow_out_of_range:
        for rec in entry:
            if abs(rec[5]) > thr:
                raise OutOfRangeError(
                    f"value {rec[5]} at (h={rec[4]}, s={rec[3]}) lies outside "
                    "the admissible support",
                    stage=n,
                    record=rec,
                )
    arr, lo, records = _backward_sweep(g, substitute_last=True)
    if not allow_out_of_range:
        for rec in records:
            if abs(rec[5]) > thr:
                kind, m, sec, sl, h, v = rec
                where = f"pair {sl}" if kind == "mass" else f"slope {sl}, h={h}"
                raise OutOfRangeError(
                    f"{kind} residual {v} at stage {m}, section {sec}, {where}",
                    stage=m,
                    record=rec,
                )
    square = SquareImage(n, arr[-lo : N - lo].copy())
    if allow_out_of_range:
        from .range import validate

        report_tol = tol
        if report_tol is None:
            report_tol = 0 if is_integer_mode(g.data) else default_float_tol(n)
        return square, validate(g, tol=report_tol)
    return square


# -- delta profiles and the truncation probe ------------------------------------


def delta_inverse_profile(
    n: int, h: int, s: int, h_lo: int, h_hi: int, dtype=np.int64
) -> StripImage:
    """The inverse image of a sinogram delta, materialized on a window.

    Column ``j`` vanishes below the tree height ``h_j`` and grows like a
    degree ``n-1`` polynomial above it with sign ``sigma_j``; the window
    bottom must not exceed ``h`` so no support is cut from below.
    """
    N = 1 << n
    if not 0 <= s < N:
        raise ValueError(f"slope s={s} out of range for n={n}")
    if h_lo > h:
        raise ValueError("window bottom must lie at or below the delta height")
    if h_hi <= h_lo:
        raise ValueError("empty window")
    arr = np.zeros((h_hi - h_lo, N), dtype=dtype)
    if h < h_hi:
        arr[h - h_lo, s] = 1
    for m in range(n, 0, -1):
        arr = _unmerge_fixed(arr, m)
    return StripImage(n, h_lo, h_hi, "sino", arr)


def divergence_probe(
    n: int, k: int, hs: tuple[int, int] | None = None,
    restricted: bool = False, dtype=np.int64,
):
    """Sup-norm of the defect left by inverting, cutting to ``k+1`` squares
    of rows, and transforming back a sinogram delta.

    With ``restricted`` the defect is first cut to the lower ``k`` squares of
    rows, where it vanishes identically: every line summed there lies inside
    the kept region.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if k < 1:
        raise ValueError("need k >= 1")
    N = 1 << n
    h, s = hs if hs is not None else (-N + 1, N - 1)
    cut = (k + 1) * N
    profile = delta_inverse_profile(n, h, s, min(h, 0), cut, dtype=dtype)
    kept = rewindow(profile, 0, cut, clip=True)
    cur = kept
    for m in range(1, n + 1):
        cur = merge_stage(cur, m)
    resid = lincomb(cur, make_delta(n, h, s, dtype=dtype), 1, -1)
    if restricted:
        resid = rewindow(resid, 0, k * N, clip=True)
    return sup_norm(resid)
