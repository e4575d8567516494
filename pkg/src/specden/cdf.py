"""Step and piecewise-linear CDFs with one-sided evaluation."""

from __future__ import annotations

import numpy as np


class StepCDF:
    """Right-continuous empirical CDF with equal jumps ``1/len(points)``."""

    def __init__(self, points):
        pts = np.sort(np.asarray(points, dtype=float).ravel())
        if pts.size == 0:
            raise ValueError("empirical CDF needs at least one point")
        self.points = pts
        self.n = pts.size

    def __call__(self, x):
        return np.searchsorted(self.points, x, side="right") / self.n

    def left(self, x):
        """Left limit ``F(x-)``."""
        return np.searchsorted(self.points, x, side="left") / self.n

    def breakpoints(self) -> np.ndarray:
        return np.unique(self.points)


class GridCDF:
    """Continuous CDF interpolated linearly on a grid, plus an optional atom at 0.

    ``F(x) = atom * 1{x >= 0} + (1 - atom) * Fc(x)`` where ``Fc`` rises from 0 at
    ``xs[0]`` to 1 at ``xs[-1]``. ``values`` is renormalised so that the
    continuous part has mass exactly one.
    """

    def __init__(self, xs, values, atom: float = 0.0):
        xs = np.asarray(xs, dtype=float)
        vals = np.asarray(values, dtype=float)
        if xs.ndim != 1 or xs.shape != vals.shape or xs.size < 2:
            raise ValueError("xs and values must be matching 1-D arrays of length >= 2")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(vals) < 0):
            raise ValueError("grid must be increasing and values non-decreasing")
        if not 0.0 <= atom < 1.0:
            raise ValueError("atom must lie in [0, 1)")
        vals = vals - vals[0]
        if vals[-1] <= 0:
            raise ValueError("grid CDF carries no mass")
        self.xs = xs
        self.values = vals / vals[-1]
        self.atom = float(atom)

    def _cont(self, x):
        return np.interp(x, self.xs, self.values, left=0.0, right=1.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.atom, 0.0) + (1 - self.atom) * self._cont(x)

    def left(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, self.atom, 0.0) + (1 - self.atom) * self._cont(x)

    def breakpoints(self) -> np.ndarray:
        if self.atom > 0:
            return np.union1d(self.xs, [0.0])
        return self.xs

    def max_increment(self) -> float:
        """Largest rise of the interpolated part between neighbouring grid points."""
        return float((1 - self.atom) * np.max(np.diff(self.values)))
