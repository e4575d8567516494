"""Density and CDF of the limiting spectral distribution from boundary values.

For ``x > 0`` the density of the companion distribution F-underbar is
``Im mu(x) / pi`` where ``mu(x)`` is the boundary value of the companion
Stieltjes transform, and the density of ``F`` itself is that divided by ``c``
(F-underbar puts mass ``1 - c`` at the origin and ``c F`` elsewhere).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import solver
from .errors import GridTooNarrow, NegativeImaginaryDrift, NotConverged
from .measure import JointMeasure
from .solver import SolverOptions

log = logging.getLogger(__name__)

CLIP = 1e-12
END_DENSITY_TOL = 1e-6


@dataclass(frozen=True)
class DensityGrid:
    xs: np.ndarray
    f_under: np.ndarray
    f: np.ndarray
    v_min: float
    boundary_residuals: np.ndarray
    c: float
    failed: np.ndarray  # points whose axis solve fell back to the smallest v

    def __len__(self):
        return len(self.xs)


def _clip_density(im_mu, where):
    dens = np.asarray(im_mu, dtype=float) / math.pi
    bad = dens < -CLIP
    if np.any(bad):
        x = np.asarray(where)[bad][0] if np.ndim(where) else where
        raise NegativeImaginaryDrift(f"negative density {dens[bad].min():.3e} near x={x}")
    return np.where(dens < CLIP, 0.0, dens)


def density_at(H: JointMeasure, c: float, x: float, opts: SolverOptions = SolverOptions()):
    """``(f_under, f)`` at a single ``x > 0``."""
    if not x > 0:
        raise ValueError("x must be positive")
    r = solver.solve_path(H, c, x, opts)
    f_under = float(_clip_density(r.mu.imag, x))
    return f_under, f_under / c


def density_on(
    H: JointMeasure,
    c: float,
    xs: Sequence[float],
    opts: SolverOptions = SolverOptions(),
    warm_start: bool = False,
) -> DensityGrid:
    """Densities at arbitrary ascending points ``xs > 0``.

    The default solves all points in one vectorized continuation. With
    ``warm_start`` the sweep is sequential and each continuation level is
    seeded from the previous grid point at the same level; results agree with
    the independent solves to solver tolerance. Points whose boundary solve
    fails keep their smallest-v value and are marked in ``failed``.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size == 0 or np.any(xs <= 0):
        raise ValueError("xs must be a non-empty 1-D array of positive values")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("xs must be strictly increasing")
    if warm_start:
        mu, res, on_axis = _sweep(H, c, xs, opts)
    else:
        mu, _, res, on_axis = solver.boundary_values(H, c, xs, opts)
    f_under = _clip_density(mu.imag, xs)
    path_floor = min(opts.path_for(float(x))[-1] for x in (xs[0], xs[-1]))
    return DensityGrid(
        xs=xs,
        f_under=f_under,
        f=f_under / c,
        v_min=float(path_floor),
        boundary_residuals=np.asarray(res, dtype=float),
        c=float(c),
        failed=~np.asarray(on_axis),
    )


def density_grid(
    H: JointMeasure,
    c: float,
    x_lo: float,
    x_hi: float,
    n_points: int,
    opts: SolverOptions = SolverOptions(),
    warm_start: bool = False,
) -> DensityGrid:
    """Densities on ``n_points`` equally spaced points of ``[x_lo, x_hi]``."""
    if not 0 < x_lo < x_hi:
        raise ValueError("need 0 < x_lo < x_hi")
    if n_points < 2:
        raise ValueError("need at least two grid points")
    return density_on(H, c, np.linspace(x_lo, x_hi, n_points), opts, warm_start)


def _sweep(H, c, xs, opts):
    prev = None
    mus = np.empty(xs.size, dtype=complex)
    res = np.empty(xs.size)
    on_axis = np.zeros(xs.size, dtype=bool)
    for i, x in enumerate(xs):
        path = opts.path_for(float(x))
        levels = []
        mu = gu = -1.0 / complex(x, path[0])
        v_last = path[0]
        for k, v in enumerate(path):
            z = complex(x, v)
            seeds = []
            if prev is not None and k < len(prev):
                seeds.append(prev[k])
            seeds.append((mu, gu))
            for m0, g0 in seeds:
                m, g, r, ok = solver.solve_many(H, c, [z], init=(m0, g0), opts=opts)
                if ok[0]:
                    break
            if not ok[0]:
                log.warning("warm-started sweep stopped at x=%g, v=%g", x, v)
                break
            mu, gu, v_last = m[0], g[0], v
            levels.append((mu, gu))
        if len(levels) < len(path):
            # keep the smallest-v value reached and mark the point
            mus[i] = mu
            res[i] = solver._residual_only(H, c, np.array([complex(x, v_last)]), np.array([mu]), np.array([gu]))[0]
            prev = levels or prev
            continue
        prev = levels
        b = solver._engine(H, c, [complex(x)], [mu], [gu], opts, opts.boundary_tol,
                           max_iter=opts.direct_iter)
        ok = b.converged[0] and solver._admissible(b.mu, b.gu, np.array([complex(x)]), opts.boundary_tol)[0]
        if ok:
            mus[i], res[i], on_axis[i] = b.mu[0], b.res[0], True
        else:
            mus[i] = mu
            res[i] = solver._residual_only(H, c, np.array([complex(x, path[-1])]), np.array([mu]), np.array([gu]))[0]
    return mus, res, on_axis


def support_grid(intervals, n_points: int, margin: float = 0.05, origin_floor: float = 1e-10) -> np.ndarray:
    """Grid over support intervals, clustered at the edges.

    Points are allotted to intervals in proportion to width, placed with
    cosine spacing, and a few points of margin are added outside each
    interval so the grid ends where the density vanishes. An interval
    starting at 0 gets a geometric run down to ``origin_floor * b``.
    """
    intervals = [(float(a), float(b)) for a, b in intervals]
    if not intervals:
        raise ValueError("need at least one interval")
    widths = np.array([b - a for a, b in intervals])
    counts = np.maximum(16, np.round(n_points * widths / widths.sum())).astype(int)
    pts = []
    for (a, b), k in zip(intervals, counts):
        theta = np.linspace(0.0, math.pi, k)
        inner = a + (b - a) * (1 - np.cos(theta)) / 2
        if a <= 0:
            inner = inner[1:]
            geo = np.geomspace(origin_floor * b, inner[0], 40, endpoint=False)
            inner = np.concatenate([geo, inner])
        else:
            lo = max(a - margin * (b - a), a / 2)
            pts.append(np.linspace(lo, a, 5, endpoint=False))
        pts.append(inner)
        pts.append(np.linspace(b, b + margin * (b - a), 6)[1:])
    xs = np.unique(np.concatenate(pts))
    return xs[xs > 0]


def cdf_and_mass(H: JointMeasure, c: float, grid: DensityGrid, opts: SolverOptions = SolverOptions()):
    """Trapezoidal CDF of ``F`` on the grid, its total mass and an estimate of ``F({0})``.

    The atom at zero is estimated as ``lim Re(-iv m(iv))`` from solves at
    ``v = 1e-3, 1e-4, 1e-5`` with Richardson extrapolation (the order is
    estimated from the three values). A grid whose first point is within
    ``1e-6`` of the origin relative to its extent is treated as starting at
    the excluded point 0, so only its right end is checked.
    """
    f = grid.f
    starts_at_origin = grid.xs[0] <= 1e-6 * grid.xs[-1]
    if f[-1] > END_DENSITY_TOL or (f[0] > END_DENSITY_TOL and not starts_at_origin):
        raise GridTooNarrow("density does not vanish at the grid ends")
    F = cumulative_trapezoid(f, grid.xs, initial=0.0)
    return F, float(F[-1]), mass_at_zero(H, c, opts)


def mass_at_zero(H: JointMeasure, c: float, opts: SolverOptions = SolverOptions()) -> float:
    vs = np.array([1e-3, 1e-4, 1e-5])
    path = np.geomspace(1.0, 1e-5, 26)
    zs = 1j * path
    mu = gu = -1.0 / zs[0]
    vals = {}
    for z in zs:
        m, g, _, ok = solver.solve_many(H, c, [z], init=(mu, gu), opts=opts)
        if not ok[0]:
            raise NotConverged(f"imaginary-axis solve failed at z={z}")
        mu, gu = m[0], g[0]
        vals[z.imag] = mu
    est = []
    for v in vs:
        mu_v = vals[min(vals, key=lambda k: abs(k - v))]
        est.append(((-1j * v * mu_v - (1 - c)) / c).real)
    return _richardson(*est)


def _richardson(e1, e2, e3, ratio=10.0):
    """Extrapolate ``e(v) = a + b v^p`` to ``v = 0`` from values at ``v, v/ratio, v/ratio^2``."""
    d1, d2 = e1 - e2, e2 - e3
    if d2 == 0 or d1 == 0:
        return float(e3)
    r = d1 / d2
    if r <= 1.0:
        # not in the asymptotic regime; first-order extrapolation
        return float(e3 - d2 / (ratio - 1))
    return float(e3 - d2 / (r - 1))
