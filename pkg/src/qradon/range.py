"""Range characterization: admissible supports, constraint families, validator.

A sinogram is the transform of some square image exactly when, running the
backward substitution level by level, every per-pair mass balance vanishes
and every substituted value outside the admissible trapezoid vanishes.
Counting both kinds over all levels gives exactly N(N-1)/2 constraints,
matching the codomain redundancy: the window of admissible (height, slope)
pairs has 3N^2/2 - N/2 cells against N^2 image degrees of freedom.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .grid import StripImage, is_integer_mode, make_delta, lincomb
from .inverse import (
    _backward_sweep,
    _entry_violation_records,
    _mass_values,
    _threshold,
)


@dataclass(frozen=True, eq=False)
class SupportRegion:
    """The admissible index set of a level: ``-(s rem 2**m) <= h <= N-1``
    over one section's slopes."""

    n: int
    m: int
    ell: int

    def __post_init__(self):
        if not 0 <= self.m <= self.n:
            raise ValueError(f"level m={self.m} out of range for n={self.n}")
        if not 0 <= self.ell < (1 << (self.n - self.m)):
            raise ValueError(f"section index ell={self.ell} out of range")

    def contains(self, h: int, s: int) -> bool:
        w = 1 << self.m
        if not 0 <= s - self.ell * w < w:
            return False
        return -(s % w) <= h <= (1 << self.n) - 1

    def cardinality(self) -> int:
        w = 1 << self.m
        return (w << self.n) + (w * (w - 1)) // 2


def support_region(n: int, m: int, ell: int) -> SupportRegion:
    return SupportRegion(n, m, ell)


def check_support(g: StripImage, m: int) -> bool:
    """True when ``g`` is supported inside the level-``m`` admissible set."""
    if not 0 <= m <= g.n:
        raise ValueError(f"level m={m} out of range for n={g.n}")
    N = 1 << g.n
    heights = np.arange(g.h_lo, g.h_hi)[:, None]
    srem = (np.arange(N) % (1 << m))[None, :]
    ok = (heights >= -srem) & (heights <= N - 1)
    return not np.any(~ok & (g.data != 0))


def mass_residuals(g: StripImage, m: int, ell: int) -> list:
    """Per-pair mass imbalances of section ``ell`` at level ``m``.

    Entry ``t`` is the sum of the slope ``2t`` column from its admissible
    bottom minus the slope ``2t+1`` column from one row lower; both equal the
    section's total mass for stage outputs.
    """
    if not 1 <= m <= g.n:
        raise ValueError(f"level m={m} out of range for n={g.n}")
    if not 0 <= ell < (1 << (g.n - m)):
        raise ValueError(f"section index ell={ell} out of range")
    vals = _mass_values(g.data, g.h_lo, g.n, m)
    return [v.item() for v in vals[ell]]


# -- constraint bookkeeping -----------------------------------------------------


@dataclass(frozen=True)
class ConstraintId:
    """Identifies one residual: a mass pair or an out-of-region position.

    ``m`` is the level whose processing records it; support residuals carry
    the level ``m-1`` section holding the value and its (slope, height).
    """

    kind: str  # "mass" | "support"
    m: int
    section: int
    slope: int
    h: int | None = None

    def sort_key(self):
        return (-self.m, 0 if self.kind == "mass" else 1, self.section,
                self.slope, self.h if self.h is not None else 0)


@dataclass(eq=False)
class RangeReport:
    """Residuals of every constraint plus the verdict at a tolerance."""

    n: int
    tol: float
    threshold: float
    mode: str
    residuals: dict = field(default_factory=dict)
    entry_check_failed: bool = False

    @property
    def max_abs(self):
        return max((abs(v) for v in self.residuals.values()), default=0)

    @property
    def mass_count(self) -> int:
        return sum(1 for c in self.residuals if c.kind == "mass")

    @property
    def support_count(self) -> int:
        return sum(1 for c in self.residuals if c.kind == "support")

    @property
    def counts(self) -> tuple[int, int]:
        return (self.mass_count, self.support_count)

    @property
    def passed(self) -> bool:
        return not self.entry_check_failed and self.max_abs <= self.threshold

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "tol": self.tol,
            "threshold": self.threshold,
            "mode": self.mode,
            "passed": self.passed,
            "entry_check_failed": self.entry_check_failed,
            "max_abs_residual": self.max_abs,
            "counts": {"mass": self.mass_count, "support": self.support_count,
                       "total": len(self.residuals)},
            "residuals": [
                {"kind": c.kind, "m": c.m, "section": c.section,
                 "slope": c.slope, "h": c.h, "value": v}
                for c, v in self.residuals.items()
            ],
        }


def constraint_count(n: int) -> int:
    """Number of independent range constraints, N(N-1)/2."""
    if n < 0:
        raise ValueError("n must be >= 0")
    N = 1 << n
    return (N * (N - 1)) // 2


def constraint_breakdown(n: int) -> tuple[int, dict[int, int]]:
    """Mass total and per-level support counts summing to N(N-1)/2."""
    if n < 0:
        raise ValueError("n must be >= 0")
    N = 1 << n
    mass_total = (N // 2) * n
    support = {m: (N * ((1 << (m - 1)) - 1)) // 2 for m in range(2, n + 1)}
    return mass_total, support


def validate(g: StripImage, tol=0.0) -> RangeReport:
    """Decide whether ``g`` is the transform of a square image.

    Requires support inside the admissible trapezoid (else the report fails
    immediately, carrying the offending values); then the staged substitution
    records all N(N-1)/2 mass and support residuals.  Integer data passes at
    ``tol = 0`` exactly when it is in the range; float data is compared
    against ``tol * (1 + max |g|)``.
    """
    n = g.n
    mode = "i64" if is_integer_mode(g.data) else "f64"
    thr = _threshold(g.data, tol, n)
    report = RangeReport(n=n, tol=float(tol), threshold=float(thr), mode=mode)
    bad_entry = [r for r in _entry_violation_records(g) if abs(r[5]) > thr]
    if bad_entry:
        report.entry_check_failed = True
        for kind, m, sec, sl, h, v in bad_entry:
            report.residuals[ConstraintId(kind, m, sec, sl, h)] = v
        return report
    _, _, records = _backward_sweep(g, substitute_last=False)
    records.sort(key=lambda r: ConstraintId(*r[:5]).sort_key())
    for kind, m, sec, sl, h, v in records:
        report.residuals[ConstraintId(kind, m, sec, sl, h)] = v
    expected = constraint_count(n)
    if len(report.residuals) != expected:
        raise AssertionError(
            f"recorded {len(report.residuals)} residuals, expected {expected}"
        )
    return report


# -- explicit constraint families (used by property tests, not by validate) -----


class BasisElement(NamedTuple):
    p: int
    q: int
    image: StripImage


class MassElement(NamedTuple):
    q: int
    image: StripImage


@dataclass(frozen=True, eq=False)
class BasisFamilies:
    """Two-entry pair images and mass testers of one (level, section) block,
    split into the parts a stage image can and cannot touch."""

    phi_over: tuple
    phi_under: tuple
    psi_over: tuple
    psi_under: tuple
    mu: tuple

    @property
    def phi(self) -> tuple:
        return self.phi_under + self.phi_over

    @property
    def psi(self) -> tuple:
        return self.psi_over + self.psi_under


def phi_image(n: int, m: int, ell: int, p: int, q: int, dtype=np.int64) -> StripImage:
    """Aligned slope pair: ones at ``(p, 2q)`` and ``(p, 2q+1)`` in section ``ell``."""
    base = ell << m
    out = StripImage.zeros(n, p, p + 1, dtype=dtype)
    out.data[0, 2 * q + base] = 1
    out.data[0, 2 * q + 1 + base] = 1
    return out


def psi_image(n: int, m: int, ell: int, p: int, q: int, dtype=np.int64) -> StripImage:
    """Sheared slope pair: ones at ``(p, 2q)`` and ``(p-1, 2q+1)``."""
    base = ell << m
    out = StripImage.zeros(n, p - 1, p + 1, dtype=dtype)
    out.data[1, 2 * q + base] = 1
    out.data[0, 2 * q + 1 + base] = 1
    return out


def mu_image(n: int, m: int, ell: int, q: int, dtype=np.int64) -> StripImage:
    """Mass tester: +1 down the slope ``2q`` column from its admissible
    bottom, -1 down the ``2q+1`` column from one row lower."""
    N = 1 << n
    base = ell << m
    out = StripImage.zeros(n, -2 * q - 1, N, dtype=dtype)
    out.data[1:, 2 * q + base] = 1
    out.data[:, 2 * q + 1 + base] = -1
    return out


def basis_families(n: int, m: int, ell: int, dtype=np.int64) -> BasisFamilies:
    """All pair images and mass testers of section ``ell`` at level ``m``.

    The "under" parts are the pairs whose coefficients must vanish for a
    stage image: the first ``q`` below the admissible bottom for the aligned
    family, the last ``q`` above the square top for the sheared family.
    """
    if not 1 <= m <= n:
        raise ValueError(f"level m={m} out of range for n={n}")
    if not 0 <= ell < (1 << (n - m)):
        raise ValueError(f"section index ell={ell} out of range")
    N = 1 << n
    phi_over, phi_under, psi_over, psi_under, mu = [], [], [], [], []
    for q in range(1 << (m - 1)):
        for p in range(-2 * q, N):
            el = BasisElement(p, q, phi_image(n, m, ell, p, q, dtype))
            (phi_under if p < -q else phi_over).append(el)
            el = BasisElement(p, q, psi_image(n, m, ell, p, q, dtype))
            (psi_under if p >= N - q else psi_over).append(el)
        mu.append(MassElement(q, mu_image(n, m, ell, q, dtype)))
    return BasisFamilies(
        tuple(phi_over), tuple(phi_under), tuple(psi_over), tuple(psi_under),
        tuple(mu),
    )


def perturb(g: StripImage, h: int, s: int, amount) -> StripImage:
    """``g`` plus ``amount`` at ``(h, s)``; handy for localization tests."""
    return lincomb(g, make_delta(g.n, h, s, dtype=g.data.dtype), 1, amount)
