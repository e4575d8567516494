"""Distances between empirical spectra and the limiting distribution."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import density as _density
from . import support as _support
from .cdf import GridCDF, StepCDF
from .errors import GridTooCoarse
from .measure import JointMeasure
from .simulator import ModelSpec, sample_eigenvalues
from .solver import SolverOptions, _check_c

LEVY_TOL = 1e-6


@dataclass(frozen=True)
class DistanceReport:
    kolmogorov: float
    levy: float
    n: int
    grid_resolution: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _candidates(F, G):
    return np.union1d(F.breakpoints(), G.breakpoints())


def kolmogorov_distance(F, G) -> float:
    """Sup-norm distance, exact for step and piecewise-linear CDFs.

    Between consecutive breakpoints of either CDF the difference is linear,
    so the supremum is attained as a one-sided limit at a breakpoint. When a
    step CDF is compared with a grid CDF the grid must rise by less than
    half a step between neighbouring points.
    """
    for a, b in ((F, G), (G, F)):
        if isinstance(a, StepCDF) and isinstance(b, GridCDF):
            if b.max_increment() > 1.0 / (2 * a.n):
                raise GridTooCoarse(
                    f"grid CDF rises by {b.max_increment():.3g} between points; need <= {1 / (2 * a.n):.3g}"
                )
    x = _candidates(F, G)
    right = np.abs(F(x) - G(x))
    left = np.abs(F.left(x) - G.left(x))
    return float(max(right.max(), left.max()))


def _levy_feasible(F, G, delta, slack=1e-12) -> bool:
    """Does ``G(x - d) - d <= F(x) <= G(x + d) + d`` hold for every x?"""
    bf, bg = F.breakpoints(), G.breakpoints()
    x = np.concatenate([bf, bg - delta, bg + delta])
    upper_r = F(x) - G(x + delta)
    upper_l = F.left(x) - G.left(x + delta)
    lower_r = G(x - delta) - F(x)
    lower_l = G.left(x - delta) - F.left(x)
    worst = max(upper_r.max(), upper_l.max(), lower_r.max(), lower_l.max())
    return worst <= delta + slack


def levy_distance(F, G, tol: float = LEVY_TOL) -> float:
    """Lévy distance by bisection on ``delta`` in ``[0, 1]``."""
    if _levy_feasible(F, G, 0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol / 2:
        mid = 0.5 * (lo + hi)
        if _levy_feasible(F, G, mid):
            hi = mid
        else:
            lo = mid
    return float(hi)


def distance_report(F_emp: StepCDF, F_theory: GridCDF) -> DistanceReport:
    return DistanceReport(
        kolmogorov=kolmogorov_distance(F_emp, F_theory),
        levy=levy_distance(F_emp, F_theory),
        n=F_emp.n,
        grid_resolution=F_theory.max_increment(),
    )


def theory_cdf(
    H: JointMeasure,
    c: float,
    which: str = "B",
    n_points: int = 6000,
    opts: SolverOptions = SolverOptions(),
    support=None,
) -> GridCDF:
    """Limiting CDF of ``B`` (``which='B'``) or of its companion (``'B_under'``).

    The density is integrated by the trapezoid rule over a grid clustered at
    the support edges. ``F`` has no atom at zero for ``c <= 1``; the
    companion distribution carries an atom of size ``1 - c`` there.
    """
    _check_c(c)
    if support is None:
        support = _support.find_support(H, c, opts=opts, cross_validate=False)
    xs = _density.support_grid(support.intervals, n_points)
    grid = _density.density_on(H, c, xs, opts)
    F = cumulative_trapezoid(grid.f, xs, initial=0.0)
    if which == "B":
        return GridCDF(xs, F)
    if which in ("B_under", "B_"):
        return GridCDF(xs, F, atom=1.0 - c)
    raise ValueError("which must be 'B' or 'B_under'")


def replicate_seed(seed: int, n: int, r: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(n), int(r)]).generate_state(1, np.uint64)[0])


def _threads(threads):
    if threads is None:
        threads = int(os.environ.get("SPECDEN_THREADS", "1") or 1)
    return max(1, int(threads))


@dataclass(frozen=True)
class StudyRow:
    n: int
    N: int
    kolmogorov_mean: float
    kolmogorov_se: float
    levy_mean: float
    levy_se: float
    reports: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "reports"}
        d["replicates"] = [r.to_json() for r in self.reports]
        return d


def _mean_se(vals):
    vals = np.asarray(vals, dtype=float)
    se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    return float(vals.mean()), se


def convergence_study(
    H: JointMeasure,
    c: float,
    n_list,
    replicates: int,
    seed: int,
    entry_dist: str = "real-gaussian",
    theory: GridCDF = None,
    threads=None,
    opts: SolverOptions = SolverOptions(),
):
    """Mean Kolmogorov and Lévy distances between ESDs of ``B`` and ``F`` for each n.

    ``N = round(n / c)``. Replicate ``r`` at size ``n`` uses a seed derived
    from ``(seed, n, r)``, so results do not depend on scheduling.
    """
    if replicates < 1:
        raise ValueError("need at least one replicate")
    if not n_list:
        raise ValueError("n_list is empty")
    if theory is None:
        need = 1.0 / (2 * max(int(n) for n in n_list))
        sup = _support.find_support(H, c, opts=opts, cross_validate=False)
        pts = 6000
        theory = theory_cdf(H, c, n_points=pts, opts=opts, support=sup)
        while theory.max_increment() > need:
            pts *= 2
            theory = theory_cdf(H, c, n_points=pts, opts=opts, support=sup)

    def one(n, r):
        spec = ModelSpec(n=n, N=max(1, round(n / c)), measure=H, entry_dist=entry_dist,
                         seed=replicate_seed(seed, n, r))
        return distance_report(StepCDF(sample_eigenvalues(spec).eigs_B), theory)

    jobs = [(int(n), r) for n in n_list for r in range(replicates)]
    workers = _threads(threads)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(lambda a: one(*a), jobs))
    else:
        reports = [one(*a) for a in jobs]
    rows = []
    for i, n in enumerate(int(n) for n in n_list):
        reps = reports[i * replicates : (i + 1) * replicates]
        km, kse = _mean_se([r.kolmogorov for r in reps])
        lm, lse = _mean_se([r.levy for r in reps])
        rows.append(StudyRow(n, max(1, round(n / c)), km, kse, lm, lse, reps))
    return rows


def nonincreasing_within_se(rows, attr: str = "kolmogorov") -> bool:
    """Means decrease in n up to twice the combined standard error."""
    for a, b in zip(rows, rows[1:]):
        ma, sa = getattr(a, attr + "_mean"), getattr(a, attr + "_se")
        mb, sb = getattr(b, attr + "_mean"), getattr(b, attr + "_se")
        if mb > ma + 2 * math.hypot(sa, sb):
            return False
    return True
