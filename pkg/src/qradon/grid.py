"""Index spaces, image containers, section views and the dot product.

Images live on the vertical strip ``ZZ x {0..N-1}`` with ``N = 2**n``.  A
:class:`StripImage` stores a finite height window ``[h_lo, h_hi)``; every
value outside the window is implicitly zero, so a strip represents an image
whose support is bounded below.  A :class:`SquareImage` is the N x N special
case with heights ``0..N-1``.

Two element modes are supported: 64-bit signed integers (all identities are
bit exact, overflow raises instead of wrapping) and double precision floats
(summations run in a fixed ascending-height order for reproducibility).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ClipError(ValueError):
    """Shrinking a window would silently drop nonzero values."""


_INT = np.int64
_FLOAT = np.float64


def _as_mode_array(data) -> np.ndarray:
    """Coerce to the int64 or float64 element mode."""
    arr = np.asarray(data)
    if arr.dtype == _INT or arr.dtype == _FLOAT:
        return arr
    if np.issubdtype(arr.dtype, np.integer) or arr.dtype == bool:
        return arr.astype(_INT)
    if np.issubdtype(arr.dtype, np.floating):
        return arr.astype(_FLOAT)
    raise ValueError(f"unsupported element dtype {arr.dtype!r}")


def is_integer_mode(arr: np.ndarray) -> bool:
    return arr.dtype == _INT


# -- checked int64 arithmetic -------------------------------------------------
#
# numpy integer arithmetic wraps silently mod 2**64; the sign trick below
# detects signed overflow exactly, so integer mode fails loudly instead of
# producing wrapped garbage.


def _raise_overflow() -> None:
    raise OverflowError("int64 overflow in integer mode")


def add_checked(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    c = a + b
    if a.dtype == _INT and np.any(((a ^ c) & (b ^ c)) < 0):
        _raise_overflow()
    return c


def sub_checked(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    c = a - b
    if a.dtype == _INT and np.any(((a ^ b) & (a ^ c)) < 0):
        _raise_overflow()
    return c


def cumsum_checked(x: np.ndarray, axis: int = 0) -> np.ndarray:
    c = np.cumsum(x, axis=axis)
    if x.dtype == _INT:
        prev = c - x  # wraps back to the running totals preceding each entry
        if np.any(((prev ^ c) & (x ^ c)) < 0):
            _raise_overflow()
    return c


def sum_checked(x: np.ndarray):
    """Sum in ascending C order; exact overflow detection in integer mode."""
    flat = np.ascontiguousarray(x).ravel()
    if flat.size == 0:
        return _INT.type(0) if x.dtype == _INT else _FLOAT.type(0.0)
    return cumsum_checked(flat)[-1]


def _mul_checked(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.dtype != _INT:
        return a * b
    # cheap bound first; fall back to exact object arithmetic near the edge
    ma = int(np.max(np.abs(a), initial=0))
    mb = int(np.max(np.abs(b), initial=0))
    if ma * mb <= np.iinfo(_INT).max:
        return a * b
    prod = a.astype(object) * b.astype(object)
    lim = np.iinfo(_INT)
    if np.any(prod > lim.max) or np.any(prod < lim.min):
        _raise_overflow()
    return prod.astype(_INT)


# -- containers ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SquareImage:
    """An N x N image, ``N = 2**n``, indexed ``(i, j)`` with ``i`` the height."""

    n: int
    data: np.ndarray

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("scale exponent must be >= 0")
        object.__setattr__(self, "data", _as_mode_array(self.data))
        side = 1 << self.n
        if self.data.shape != (side, side):
            raise ValueError(
                f"expected {side}x{side} data for n={self.n}, got {self.data.shape}"
            )

    @property
    def side(self) -> int:
        return 1 << self.n

    @classmethod
    def zeros(cls, n: int, dtype=_INT) -> "SquareImage":
        side = 1 << n
        return cls(n, np.zeros((side, side), dtype=dtype))

    @classmethod
    def from_array(cls, data) -> "SquareImage":
        arr = _as_mode_array(data)
        side = arr.shape[0] if arr.ndim == 2 else 0
        n = max(side - 1, 0).bit_length()
        return cls(n, arr)


@dataclass(frozen=True, eq=False)
class StripImage:
    """A windowed strip image: rows are heights ``h_lo .. h_hi - 1``.

    ``kind`` is the container tag used by the file format: ``"image"`` for
    square-image content (window must be ``[0, N)`` to serialize as such),
    ``"sino"`` for anything carrying an explicit window.
    """

    n: int
    h_lo: int
    h_hi: int
    kind: str
    data: np.ndarray

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("scale exponent must be >= 0")
        if self.h_hi < self.h_lo:
            raise ValueError("window bounds must satisfy h_lo <= h_hi")
        if self.kind not in ("image", "sino"):
            raise ValueError(f"unknown kind {self.kind!r}")
        object.__setattr__(self, "data", _as_mode_array(self.data))
        shape = (self.h_hi - self.h_lo, 1 << self.n)
        if self.data.shape != shape:
            raise ValueError(
                f"expected {shape[0]}x{shape[1]} data for the window, got {self.data.shape}"
            )

    @property
    def width(self) -> int:
        return 1 << self.n

    @property
    def rows(self) -> int:
        return self.h_hi - self.h_lo

    def at(self, h: int, j: int):
        """Value at height ``h``, column ``j``; zero outside the window."""
        if not 0 <= j < self.width:
            raise ValueError(f"column {j} out of range for n={self.n}")
        if self.h_lo <= h < self.h_hi:
            return self.data[h - self.h_lo, j].item()
        return 0 if is_integer_mode(self.data) else 0.0

    @classmethod
    def zeros(cls, n: int, h_lo: int, h_hi: int, kind: str = "sino", dtype=_INT):
        return cls(n, h_lo, h_hi, kind, np.zeros((h_hi - h_lo, 1 << n), dtype=dtype))


@dataclass(frozen=True, eq=False)
class SectionView:
    """Write-through view of the ``(m, ell)``-section of a strip.

    Column ``j`` of the view aliases parent column ``j + ell * 2**m``; this is
    the one sanctioned mutation path (a builder), everything else treats
    images as immutable.
    """

    parent: StripImage
    m: int
    ell: int

    @property
    def width(self) -> int:
        return 1 << self.m

    @property
    def col_offset(self) -> int:
        return self.ell << self.m

    @property
    def data(self) -> np.ndarray:
        off = self.col_offset
        return self.parent.data[:, off : off + self.width]

    def __getitem__(self, hj):
        h, j = hj
        if not 0 <= j < self.width:
            raise ValueError(f"column {j} out of range for section scale m={self.m}")
        return self.parent.at(h, j + self.col_offset)

    def __setitem__(self, hj, value):
        h, j = hj
        if not 0 <= j < self.width:
            raise ValueError(f"column {j} out of range for section scale m={self.m}")
        if not self.parent.h_lo <= h < self.parent.h_hi:
            raise ValueError(f"height {h} outside the parent window")
        self.parent.data[h - self.parent.h_lo, j + self.col_offset] = value

    def to_strip(self) -> StripImage:
        """Materialize the section as an independent scale-``m`` strip."""
        return StripImage(
            self.m, self.parent.h_lo, self.parent.h_hi, self.parent.kind,
            self.data.copy(),
        )


# -- operations ---------------------------------------------------------------


def section(f: StripImage, m: int, ell: int) -> SectionView:
    """The ``(m, ell)``-section of ``f``: columns ``ell*2**m .. (ell+1)*2**m - 1``."""
    if not 0 <= m <= f.n:
        raise ValueError(f"section scale m={m} out of range for n={f.n}")
    if not 0 <= ell < (1 << (f.n - m)):
        raise ValueError(f"section index ell={ell} out of range for m={m}, n={f.n}")
    return SectionView(f, m, ell)


def dot(f: StripImage, g: StripImage):
    """Pointwise dot product; windows may differ (outside values are zero)."""
    if f.n != g.n:
        raise ValueError(f"scale mismatch: n={f.n} vs n={g.n}")
    lo = max(f.h_lo, g.h_lo)
    hi = min(f.h_hi, g.h_hi)
    if hi <= lo:
        both_int = is_integer_mode(f.data) and is_integer_mode(g.data)
        return 0 if both_int else 0.0
    a = f.data[lo - f.h_lo : hi - f.h_lo]
    b = g.data[lo - g.h_lo : hi - g.h_lo]
    if is_integer_mode(a) != is_integer_mode(b):
        a = a.astype(_FLOAT)
        b = b.astype(_FLOAT)
    return sum_checked(_mul_checked(a, b)).item()


def make_delta(n: int, i: int, j: int, dtype=_INT, kind: str = "sino") -> StripImage:
    """A Kronecker delta: window ``[i, i+1)``, single one at ``(i, j)``."""
    if not 0 <= j < (1 << n):
        raise ValueError(f"column {j} out of range for n={n}")
    out = StripImage.zeros(n, i, i + 1, kind=kind, dtype=dtype)
    out.data[0, j] = 1
    return out


def rewindow(f: StripImage, h_lo: int, h_hi: int, clip: bool = False) -> StripImage:
    """Copy ``f`` onto the window ``[h_lo, h_hi)``.

    Shrinking over nonzero values raises :class:`ClipError` unless ``clip``
    is set; with ``clip`` the discarded values realize a rectangular cut-off.
    """
    if h_hi < h_lo:
        raise ValueError("window bounds must satisfy h_lo <= h_hi")
    out = np.zeros((h_hi - h_lo, f.width), dtype=f.data.dtype)
    lo = max(f.h_lo, h_lo)
    hi = min(f.h_hi, h_hi)
    if hi > lo:
        out[lo - h_lo : hi - h_lo] = f.data[lo - f.h_lo : hi - f.h_lo]
    if not clip:
        if np.any(f.data[: max(lo, f.h_lo) - f.h_lo]) or np.any(
            f.data[max(hi, f.h_lo) - f.h_lo :]
        ):
            raise ClipError(
                "new window drops nonzero values; pass clip=True to allow"
            )
    return StripImage(f.n, h_lo, h_hi, f.kind, out)


def embed(f: SquareImage) -> StripImage:
    """Embed a square image as a strip on the window ``[0, N)``."""
    return StripImage(f.n, 0, f.side, "image", f.data.copy())


# -- small strip utilities used across the library and the tests --------------


def lincomb(f: StripImage, g: StripImage, a=1, b=1) -> StripImage:
    """``a*f + b*g`` on the union window."""
    if f.n != g.n:
        raise ValueError(f"scale mismatch: n={f.n} vs n={g.n}")
    lo = min(f.h_lo, g.h_lo)
    hi = max(f.h_hi, g.h_hi)
    fd = rewindow(f, lo, hi).data
    gd = rewindow(g, lo, hi).data
    float_result = (
        not is_integer_mode(fd)
        or not is_integer_mode(gd)
        or isinstance(a, float)
        or isinstance(b, float)
    )
    if float_result:
        fd = fd.astype(_FLOAT)
        gd = gd.astype(_FLOAT)
        a = _FLOAT(a)
        b = _FLOAT(b)
    else:
        a = _INT(a)
        b = _INT(b)
    data = add_checked(_mul_checked(fd, a), _mul_checked(gd, b))
    return StripImage(f.n, lo, hi, f.kind, data)


def values_equal(f: StripImage, g: StripImage) -> bool:
    """Equality as strip images (windows may differ; outside values are 0)."""
    if f.n != g.n:
        return False
    lo = min(f.h_lo, g.h_lo)
    hi = max(f.h_hi, g.h_hi)
    return np.array_equal(rewindow(f, lo, hi).data, rewindow(g, lo, hi).data)


def sup_norm(f: StripImage):
    return np.max(np.abs(f.data), initial=0).item()


def max_abs_diff(f: StripImage, g: StripImage):
    """Sup-norm of ``f - g`` over the union window."""
    lo = min(f.h_lo, g.h_lo)
    hi = max(f.h_hi, g.h_hi)
    a = rewindow(f, lo, hi).data
    b = rewindow(g, lo, hi).data
    return np.max(np.abs(a - b), initial=0).item()
