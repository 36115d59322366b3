"""Exact, order-independent sums of float64 values.

Lloyd's update divides per-cluster coordinate sums by cluster weights. If those
sums are rounded floats, splitting the points over a different number of
machines changes the grouping and therefore the last bits of the centers. Here
each value is split into its integer mantissa and binary exponent; mantissas
are cut into 18-bit limbs and accumulated per (label, column, exponent) bucket.
Limb sums stay below 2**53, so float64 adds them without error and partial
results from different machines can be merged in any order.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

_LIMB = 18
_MASK = (1 << _LIMB) - 1
FULL_EXPONENT_RANGE = (-1073, 1025)


def exponent_range(values) -> tuple[int, int]:
    """Smallest and largest binary exponent (as from ``np.frexp``) in ``values``."""
    values = np.asarray(values, dtype=np.float64)
    nz = values[values != 0]
    if nz.size == 0:
        return (0, 0)
    _, ex = np.frexp(nz)
    return int(ex.min()), int(ex.max())


class ExactSums:
    """Per-label, per-column exact sums, mergeable across machines with ``+=``."""

    def __init__(self, labels: int, columns: int, exp_range: tuple[int, int]):
        self.labels = labels
        self.columns = columns
        self.lo, self.hi = exp_range
        self.span = self.hi - self.lo + 1
        self.bins = np.zeros((3, labels * columns * self.span))

    @classmethod
    def of(cls, values, label_of, labels: int, exp_range, weights=None) -> "ExactSums":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        m, c = values.shape
        acc = cls(labels, c, exp_range)
        if m == 0:
            return acc
        mant, ex = np.frexp(values)
        ints = (mant * 2.0**53).astype(np.int64)
        ex = np.where(ints == 0, acc.lo, ex)
        if ex.min() < acc.lo or ex.max() > acc.hi:
            raise ValueError("value exponent outside the declared range")
        sign = np.sign(ints).astype(np.float64)
        mag = np.abs(ints)
        if weights is not None:
            sign = sign * np.asarray(weights, dtype=np.float64)[:, None]
        label_of = np.asarray(label_of, dtype=np.int64)
        key = (label_of[:, None] * c + np.arange(c)[None, :]) * acc.span + (ex - acc.lo)
        key = key.ravel()
        size = acc.bins.shape[1]
        for limb in range(3):
            part = ((mag >> (_LIMB * limb)) & _MASK).astype(np.float64) * sign
            acc.bins[limb] = np.bincount(key, weights=part.ravel(), minlength=size)
        return acc

    def __iadd__(self, other: "ExactSums") -> "ExactSums":
        if other.bins.shape != self.bins.shape or other.lo != self.lo:
            raise ValueError("incompatible partial sums")
        self.bins += other.bins
        return self

    def totals(self) -> list[list[Fraction]]:
        """Exact sums as fractions, indexed [label][column]."""
        scale = self.lo - 53
        nums = [0] * (self.labels * self.columns)
        limb, flat = np.nonzero(self.bins)
        for li, f in zip(limb.tolist(), flat.tolist()):
            cell, e = divmod(f, self.span)
            nums[cell] += int(self.bins[li, f]) << (_LIMB * li + e)
        out = []
        for lab in range(self.labels):
            row = []
            for col in range(self.columns):
                num = nums[lab * self.columns + col]
                row.append(Fraction(num) * Fraction(2) ** scale)
            out.append(row)
        return out
