"""Digital lines and their duals, by recursion and by closed-form bit formulas.

A digital line at level ``m`` has exactly one point per column of its
section's strip; its height function rises by 0 or 1 per column and the total
rise equals the slope index.  Dual lines descend by the same 0/1 pattern.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ClipError, StripImage


@dataclass(frozen=True, eq=False)
class DigitalLine:
    """Point set of a line: one height per column of the ``(m, ell)``-section."""

    n: int
    m: int
    ell: int
    h: int
    s: int
    heights: np.ndarray  # k(t) for t in 0 .. 2**m - 1

    @property
    def cols(self) -> np.ndarray:
        """Ambient column indices: ``t + ell * 2**m``."""
        return np.arange(1 << self.m, dtype=np.int64) + (self.ell << self.m)

    @property
    def points(self) -> list[tuple[int, int]]:
        return [(int(k), int(c)) for k, c in zip(self.heights, self.cols)]


def _check_indices(n: int, m: int, ell: int, s: int) -> None:
    if not 0 <= m <= n:
        raise ValueError(f"level m={m} out of range for n={n}")
    if not 0 <= ell < (1 << (n - m)):
        raise ValueError(f"section index ell={ell} out of range for m={m}, n={n}")
    if not 0 <= s < (1 << m):
        raise ValueError(f"slope s={s} out of range for level m={m}")


def _recurse(m: int, h: int, s: int, sign: int) -> list[int]:
    # sign=+1 builds a line, sign=-1 a dual line (descending joins)
    if m == 0:
        return [h]
    t, r = divmod(s, 2)
    left = _recurse(m - 1, h, t, sign)
    right = _recurse(m - 1, h + sign * (t + r), t, sign)
    return left + right


def digital_line_recursive(n: int, m: int, ell: int, h: int, s: int) -> DigitalLine:
    """Build a digital line by the two-section join recursion.

    Odd slope ``2t+1`` joins the left half-line of slope ``t`` with the right
    half-line shifted up by ``t+1``; even slope ``2t`` shifts by ``t``.
    """
    _check_indices(n, m, ell, s)
    heights = np.array(_recurse(m, h, s, +1), dtype=np.int64)
    return DigitalLine(n, m, ell, h, s, heights)


def dual_line_recursive(n: int, m: int, ell: int, h: int, s: int) -> DigitalLine:
    """Dual digital line: same joins with downward shifts ``t`` / ``t+1``."""
    _check_indices(n, m, ell, s)
    heights = np.array(_recurse(m, h, s, -1), dtype=np.int64)
    return DigitalLine(n, m, ell, h, s, heights)


def bit_reverse(s: int, n: int) -> int:
    """Reverse the ``n``-bit representation of ``s`` (leading zeros count)."""
    if not 0 <= s < (1 << n):
        raise ValueError(f"s={s} does not fit in {n} bits")
    out = 0
    for _ in range(n):
        out = (out << 1) | (s & 1)
        s >>= 1
    return out


def _closed_increments(n: int, s: int) -> np.ndarray:
    """0/1 rises: bit of reversed s at the lowest set bit position of t."""
    rev = bit_reverse(s, n)
    t = np.arange(1, 1 << n, dtype=np.int64)
    lowbit = t & ~(t - 1)
    inc = (lowbit & rev) != 0
    return inc.astype(np.int64)


def digital_line_closed(n: int, h: int, s: int) -> DigitalLine:
    """Full-scale line (m = n) via the closed-form bitwise increments."""
    _check_indices(n, n, 0, s)
    heights = np.empty(1 << n, dtype=np.int64)
    heights[0] = h
    if n > 0:
        heights[1:] = h + np.cumsum(_closed_increments(n, s))
    return DigitalLine(n, n, 0, h, s, heights)


def dual_line_closed(n: int, h: int, s: int) -> DigitalLine:
    """Full-scale dual line: anchored at ``k(0) = h``, same rises negated."""
    _check_indices(n, n, 0, s)
    heights = np.empty(1 << n, dtype=np.int64)
    heights[0] = h
    if n > 0:
        heights[1:] = h - np.cumsum(_closed_increments(n, s))
    return DigitalLine(n, n, 0, h, s, heights)


def line_indicator(
    line: DigitalLine, h_lo: int | None = None, h_hi: int | None = None
) -> StripImage:
    """0/1 strip image supported exactly on the line's points."""
    kmin = int(line.heights.min())
    kmax = int(line.heights.max())
    if h_lo is None:
        h_lo = kmin
    if h_hi is None:
        h_hi = kmax + 1
    if h_lo > kmin or h_hi <= kmax:
        raise ClipError(
            f"window [{h_lo}, {h_hi}) does not cover line heights "
            f"[{kmin}, {kmax}]"
        )
    out = StripImage.zeros(line.n, h_lo, h_hi)
    out.data[line.heights - h_lo, line.cols] = 1
    return out
