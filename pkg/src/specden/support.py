"""Support of the limiting distribution from the real solution curve ``x(gu)``.

On the real axis outside the support both transforms are real. Eliminating
``z`` between the two companion equations leaves the scalar relation::

    phi(gu, mu) = c gu^2 int s dH / (1 + s gu + t mu) + mu - gu = 0

and ``x(gu) = -1/gu + c int t dH / (1 + s gu + t mu)``. Points of the curve
with ``x'(gu) > 0`` whose denominators stay away from zero lie in the
complement of the support; the support is what remains of ``(0, inf)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import expit

from . import density as _density
from .errors import ScanTooCoarse, SingularAtom
from .measure import JointMeasure
from .solver import SolverOptions, _check_c

log = logging.getLogger(__name__)

MIN_DENOM = 1e-8
_K_TAIL = 480
_K_MID = 480
_U_TAIL = np.linspace(math.log(1e-14), math.log(1e12), _K_TAIL)
_U_MID = np.linspace(-34.0, 34.0, _K_MID)


@dataclass(frozen=True)
class RealCurvePoint:
    gu: float
    mu: float
    x: float
    x_prime: float
    min_denom: float


@dataclass(frozen=True)
class SupportResult:
    intervals: list
    boundary_points: list
    atom_at_zero_under: float
    warnings: list = field(default_factory=list)
    lower_edge_at_zero: bool = False
    consistent: bool = True

    def to_json(self) -> dict:
        return {
            "intervals": [[a, b] for a, b in self.intervals],
            "boundary_gu": list(self.boundary_points),
            "atom_at_zero_under": self.atom_at_zero_under,
            "warnings": list(self.warnings),
        }


# ---------------------------------------------------------------------------
# curve evaluation (all broadcasting, atom axis last)


def _d(H, gu, mu):
    return 1.0 + H.s * np.asarray(gu)[..., None] + H.t * np.asarray(mu)[..., None]


def _phi(H, c, gu, mu):
    gu = np.asarray(gu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return c * gu ** 2 * np.sum(H.w * H.s / _d(H, gu, mu), axis=-1) + mu - gu


def _phi_mu(H, c, gu, mu):
    gu = np.asarray(gu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 - c * gu ** 2 * np.sum(H.w * H.s * H.t / _d(H, gu, mu) ** 2, axis=-1)


def _curve(H, c, gu, mu):
    """``x, x', min_denom, V0, V, mu'`` on the real curve (arrays)."""
    gu = np.asarray(gu, dtype=float)
    mu = np.asarray(mu, dtype=float)
    d = _d(H, gu, mu)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = H.w / d
        r2 = r / d
        It = np.sum(r * H.t, axis=-1)
        Is = np.sum(r * H.s, axis=-1)
        Ah2 = np.sum(r2 * H.s * H.t, axis=-1)
        Bh2 = np.sum(r2 * H.t ** 2, axis=-1)
        Ass = np.sum(r2 * H.s ** 2, axis=-1)
        x = -1.0 / gu + c * It
        # slope of mu(gu) from the curve relation, then x' from the x-equation
        phi_mu = 1.0 - c * gu ** 2 * Ah2
        phi_gu = 2 * c * gu * Is - c * gu ** 2 * Ass - 1.0
        mu_p = -phi_gu / phi_mu
        x_p = 1.0 / gu ** 2 - c * Ah2 - c * Bh2 * mu_p
        q = H.w / d ** 2
        A1 = np.sum(q * H.s, axis=-1)
        A2 = np.sum(q * H.s * H.t, axis=-1)
        B1 = np.sum(q * H.t, axis=-1)
        B2 = np.sum(q * H.t ** 2, axis=-1)
        V0 = 1.0 / gu ** 2 - c * A2
        V = np.where(V0 > 0, c * c * A1 * B2 / V0 + c * B1, np.inf)
    min_denom = np.min(np.abs(d), axis=-1)
    return x, x_p, min_denom, V0, V, mu_p


def x_of_gu(H: JointMeasure, c: float, gu: float, mu: float):
    """``(x, x')`` at a point ``(gu, mu)`` of the real curve."""
    d = _d(H, gu, mu)
    if np.min(np.abs(d)) < 1e-300:
        raise SingularAtom("1 + s*gu + t*mu vanishes on the curve")
    x, xp, *_ = _curve(H, c, gu, mu)
    return float(x), float(xp)


# ---------------------------------------------------------------------------
# real roots of phi(gu, .)


def _segments(H, gus):
    """Sample points in mu for each gu, one block per pole-free interval."""
    B = gus.size
    pm = (H.s > 0) & (H.t > 0)
    if not pm.any():
        e = np.exp(_U_TAIL)
        base = np.concatenate([-e[::-1], [0.0], e])
        return [np.broadcast_to(base, (B, base.size))]
    poles = np.sort(-(1.0 + np.outer(gus, H.s[pm])) / H.t[pm], axis=1)
    segs = []
    sc = np.maximum(1.0, np.abs(poles[:, :1]))
    segs.append(poles[:, :1] - sc * np.exp(_U_TAIL[::-1]))
    for j in range(poles.shape[1] - 1):
        a, b = poles[:, j : j + 1], poles[:, j + 1 : j + 2]
        segs.append(a + (b - a) * expit(_U_MID))
    sc = np.maximum(1.0, np.abs(poles[:, -1:]))
    segs.append(poles[:, -1:] + sc * np.exp(_U_TAIL))
    return segs


def _roots_batch(H, c, gus, chunk=256):
    """Real roots ``mu`` of ``phi(gu, mu) = 0`` for each gu; list of arrays."""
    gus = np.asarray(gus, dtype=float)
    out = [[] for _ in range(gus.size)]
    for start in range(0, gus.size, chunk):
        g = gus[start : start + chunk]
        rows, lo, hi = [], [], []
        for seg in _segments(H, g):
            f = _phi(H, c, g[:, None], seg)
            f0, f1 = f[:, :-1], f[:, 1:]
            fin = np.isfinite(f0) & np.isfinite(f1)
            exact = fin & (f0 == 0)
            for r, k in zip(*np.nonzero(exact)):
                out[start + r].append(seg[r, k])
            br = fin & (f0 * f1 < 0)
            r, k = np.nonzero(br)
            rows.append(r)
            lo.append(seg[r, k])
            hi.append(seg[r, k + 1])
        if not rows:
            continue
        rows = np.concatenate(rows)
        roots = _refine(H, c, g[rows], np.concatenate(lo), np.concatenate(hi))
        for r, m in zip(rows, roots):
            out[start + r].append(m)
    return [np.sort(np.asarray(o, dtype=float)) for o in out]


def _refine(H, c, g, lo, hi, max_iter=200):
    """Safeguarded Newton-bisection on many brackets at once."""
    flo = _phi(H, c, g, lo)
    x = 0.5 * (lo + hi)
    active = np.ones(x.size, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        a = np.flatnonzero(active)
        fx = _phi(H, c, g[a], x[a])
        dfx = _phi_mu(H, c, g[a], x[a])
        same = np.sign(fx) == np.sign(flo[a])
        lo[a] = np.where(same, x[a], lo[a])
        flo[a] = np.where(same, fx, flo[a])
        hi[a] = np.where(same, hi[a], x[a])
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x[a] - fx / dfx
        inside = np.isfinite(xn) & (xn > lo[a]) & (xn < hi[a])
        xn = np.where(inside, xn, 0.5 * (lo[a] + hi[a]))
        xn = np.where(fx == 0, x[a], xn)
        step = np.abs(xn - x[a])
        x[a] = xn
        scale = np.maximum(1.0, np.abs(xn))
        done = (fx == 0) | (step <= 1e-15 * scale) | (hi[a] - lo[a] <= 1e-13 * scale)
        active[a[done]] = False
    return x


def real_mu_for_gu(H: JointMeasure, c: float, gu: float) -> list:
    """All real ``mu`` on the curve at a given nonzero ``gu``, with their ``x`` data."""
    _check_c(c)
    if gu == 0:
        raise ValueError("gu must be nonzero")
    mus = _roots_batch(H, c, np.array([float(gu)]))[0]
    if mus.size == 0:
        return []
    x, xp, md, *_ = _curve(H, c, np.full(mus.size, float(gu)), mus)
    return [RealCurvePoint(float(gu), float(m), float(a), float(b), float(e)) for m, a, b, e in zip(mus, x, xp, md)]


# ---------------------------------------------------------------------------
# branch tracking and support assembly


@dataclass
class _Sample:
    k: int
    gu: float
    mu: float
    x: float
    xp: float
    ok: bool  # on a usable part of the curve: x > 0, denominators clear, V0 > 0
    comp: bool  # certified complement point
    mu_p: float
    prev: "_Sample | None" = None
    next: "_Sample | None" = None


def _scan(H, c, gus):
    roots = _roots_batch(H, c, gus)
    samples = []
    for k, (g, mus) in enumerate(zip(gus, roots)):
        if mus.size == 0:
            samples.append([])
            continue
        x, xp, md, V0, V, mu_p = _curve(H, c, np.full(mus.size, g), mus)
        ok = (x > 0) & (md > MIN_DENOM) & (V0 > 0) & np.isfinite(x) & np.isfinite(xp)
        comp = ok & (xp > 0) & (V < x)
        samples.append([
            _Sample(k, float(g), float(m), float(a), float(b), bool(o), bool(q), float(p))
            for m, a, b, o, q, p in zip(mus, x, xp, ok, comp, mu_p)
        ])
    # link each root to the nearest predicted continuation at the next gu
    for k in range(len(gus) - 1):
        cur, nxt = samples[k], samples[k + 1]
        if not cur or not nxt:
            continue
        dg = gus[k + 1] - gus[k]
        pairs = []
        for i, s in enumerate(cur):
            pred = s.mu + (s.mu_p * dg if np.isfinite(s.mu_p) else 0.0)
            for j, t in enumerate(nxt):
                err = abs(t.mu - pred)
                if err <= 0.05 * (abs(s.mu) + abs(t.mu)) + 1e-12:
                    pairs.append((err, i, j))
        used_i, used_j = set(), set()
        for _, i, j in sorted(pairs):
            if i in used_i or j in used_j:
                continue
            cur[i].next, nxt[j].prev = nxt[j], cur[i]
            used_i.add(i)
            used_j.add(j)
    return samples


def _mu_near(H, c, g, guess):
    """Follow a branch: the root at ``g`` closest to ``guess``."""
    m = float(guess)
    for _ in range(50):
        f = float(_phi(H, c, g, m))
        df = float(_phi_mu(H, c, g, m))
        if not (np.isfinite(f) and np.isfinite(df)) or df == 0:
            break
        step = f / df
        m -= step
        if abs(step) <= 1e-15 * max(1.0, abs(m)):
            return m
    roots = _roots_batch(H, c, np.array([g]))[0]
    if roots.size == 0:
        return np.nan
    return float(roots[np.argmin(np.abs(roots - guess))])


def _branch_eval(H, c, a: _Sample, b: _Sample, g):
    t = (g - a.gu) / (b.gu - a.gu)
    m = _mu_near(H, c, g, a.mu + t * (b.mu - a.mu))
    x, xp, md, V0, V, _ = _curve(H, c, np.array([g]), np.array([m]))
    return m, float(x[0]), float(xp[0]), float(md[0]), float(V0[0]), float(V[0])


def _edge(H, c, a: _Sample, b: _Sample):
    """Locate the transition between linked samples ``a`` and ``b``.

    Returns ``(x, gu, is_critical)`` where ``is_critical`` marks a zero of
    ``x'`` found by root-finding; other transitions are located by bisection
    on the complement test.
    """
    if a.ok and b.ok and (a.xp > 0) != (b.xp > 0):
        def h(g):
            return _branch_eval(H, c, a, b, g)[2]

        try:
            g = brentq(h, a.gu, b.gu, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            return _branch_eval(H, c, a, b, g)[1], g, True
        except ValueError:
            pass

    def certified(g):
        m, x, xp, md, V0, V = _branch_eval(H, c, a, b, g)
        return np.isfinite(x) and x > 0 and md > MIN_DENOM and V0 > 0 and xp > 0 and V < x

    good, bad = (a.gu, b.gu) if a.comp else (b.gu, a.gu)
    for _ in range(60):
        mid = 0.5 * (good + bad)
        if certified(mid):
            good = mid
        else:
            bad = mid
    return _branch_eval(H, c, a, b, good)[1], good, False


def _between_samples(H, c, samples, rel=1e-6):
    """Examine local extrema of ``x'`` that the sampled signs cannot see.

    A negative local maximum of ``x'`` may rise above zero between samples,
    hiding a narrow gap of the support; those gaps are returned as extra
    complement pieces. Extrema that reach zero without a sign change are
    returned separately as touch points: they are reported, not classified.
    """
    pieces, touches = [], []
    for row in samples:
        for b in row:
            a, d = b.prev, b.next
            if a is None or d is None or not (a.ok and b.ok and d.ok):
                continue
            sgn = np.sign(b.xp)
            if sgn == 0 or np.sign(a.xp) != sgn or np.sign(d.xp) != sgn:
                continue
            if not abs(b.xp) <= min(abs(a.xp), abs(d.xp)):
                continue
            lo, hi = sorted((a.gu, d.gu))

            def xp(g):
                return _branch_eval(H, c, a, d, g)[2]

            r = minimize_scalar(lambda g: sgn * xp(g), bounds=(lo, hi),
                                method="bounded", options={"xatol": 1e-14 * max(1.0, abs(b.gu))})
            g0, peak = float(r.x), xp(r.x)
            if sgn < 0 and peak > 0:
                m, x, _, md, V0, V = _branch_eval(H, c, a, d, g0)
                if md > MIN_DENOM and V0 > 0 and V < x:
                    g1 = brentq(xp, lo, g0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
                    g2 = brentq(xp, g0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
                    x1, x2 = _branch_eval(H, c, a, d, g1)[1], _branch_eval(H, c, a, d, g2)[1]
                    if x2 > x1:
                        pieces.append((x1, x2, g1, g2))
                        continue
            if abs(peak) <= rel * max(abs(a.xp), abs(d.xp)):
                touches.append((g0, _branch_eval(H, c, a, d, g0)[1]))
    return pieces, touches


def _complement_intervals(H, c, gus, samples):
    """``(x_lo, x_hi, gu_lo_edge, gu_hi_edge)`` for each certified run."""
    runs = []
    seen = set()
    for row in samples:
        for s in row:
            if not s.comp or id(s) in seen:
                continue
            start = s
            while start.prev is not None and start.prev.comp:
                start = start.prev
            end = start
            seen.add(id(end))
            while end.next is not None and end.next.comp:
                end = end.next
                seen.add(id(end))
            # left end
            if start.prev is None and start.k == 0:
                x_lo, g_lo = 0.0, None
            elif start.prev is None:
                x_lo, g_lo = start.x, None
            else:
                x_lo, g, crit = _edge(H, c, start.prev, start)
                g_lo = g if crit else None
            if end.next is None and end.k == len(gus) - 1:
                x_hi, g_hi = math.inf, None
            elif end.next is None:
                x_hi, g_hi = end.x, None
            else:
                x_hi, g, crit = _edge(H, c, end, end.next)
                g_hi = g if crit else None
            runs.append((x_lo, x_hi, g_lo, g_hi))
    return runs


def _assemble(H, c, lo, hi, n_scan):
    pieces, touches = [], []
    for sign in (-1.0, 1.0):
        gus = np.sort(sign * np.geomspace(lo, hi, n_scan))
        samples = _scan(H, c, gus)
        pieces.extend(_complement_intervals(H, c, gus, samples))
        extra, touch = _between_samples(H, c, samples)
        pieces.extend(extra)
        touches.extend(touch)
    # merge complement intervals
    pieces.sort(key=lambda p: p[0])
    merged = []
    for x_lo, x_hi, g_lo, g_hi in pieces:
        if merged and x_lo <= merged[-1][1] * (1 + 1e-12) + 1e-14:
            m = merged[-1]
            if x_hi > m[1]:
                merged[-1] = [m[0], x_hi, m[2], g_hi]
        else:
            merged.append([x_lo, x_hi, g_lo, g_hi])
    intervals, edges, warnings = [], [], []
    lower_zero = False
    cursor, cursor_g = 0.0, None
    for x_lo, x_hi, g_lo, g_hi in merged:
        if x_lo > cursor:
            intervals.append((cursor, x_lo))
            if cursor == 0.0:
                lower_zero = True
            edges.extend(g for g in (cursor_g, g_lo) if g is not None)
        cursor, cursor_g = x_hi, g_hi
    if math.isfinite(cursor):
        warnings.append(f"support appears unbounded above x={cursor:.6g}; widen gu_range")
        intervals.append((cursor, math.inf))
    if not merged:
        warnings.append("no complement points found on the scanned curve")
    for g, x in sorted(touches, key=lambda p: p[1]):
        warnings.append(f"x' touches zero without changing sign at gu={g:.10g} (x={x:.10g}); not classified")
    if lower_zero:
        warnings.append("support reaches the origin; lower edge 0 is excluded from the analysis")
    return intervals, sorted(edges), warnings, lower_zero


def find_support(
    H: JointMeasure,
    c: float,
    gu_range: tuple = (1e-4, 1e4),
    n_scan: int = 2000,
    check_refinement: bool = True,
    cross_validate: bool = True,
    opts: SolverOptions = SolverOptions(),
) -> SupportResult:
    """Support intervals of F-underbar (equivalently of F) on ``(0, inf)``.

    ``gu`` is scanned on ``n_scan`` log-spaced points per sign over
    ``gu_range``. With ``check_refinement`` the scan is repeated at twice the
    resolution and :class:`ScanTooCoarse` is raised if the number of
    intervals changes. With ``cross_validate`` the density engine is
    evaluated at interval and gap midpoints; disagreement is reported in
    ``warnings`` and ``consistent`` rather than raised.
    """
    _check_c(c)
    lo, hi = (abs(float(v)) for v in gu_range)
    if not 0 < lo < hi:
        raise ValueError("gu_range must exclude 0: need 0 < lo < hi")
    if n_scan < 1000:
        raise ValueError("n_scan must be at least 1000")
    intervals, edges, warnings, lower_zero = _assemble(H, c, lo, hi, n_scan)
    if check_refinement:
        fine = _assemble(H, c, lo, hi, 2 * n_scan)[0]
        if len(fine) != len(intervals):
            raise ScanTooCoarse(
                f"{len(intervals)} intervals at n_scan={n_scan} but {len(fine)} at {2 * n_scan}"
            )
    consistent = True
    if cross_validate and intervals and all(math.isfinite(b) for _, b in intervals):
        bad = _cross_validate(H, c, intervals, opts)
        if bad:
            consistent = False
            warnings.append("InconsistentWithDensity: " + "; ".join(bad))
    return SupportResult(
        intervals=[(float(a), float(b)) for a, b in intervals],
        boundary_points=[float(g) for g in edges],
        atom_at_zero_under=1.0 - c,
        warnings=warnings,
        lower_edge_at_zero=lower_zero,
        consistent=consistent,
    )


def complement_samples(intervals, n: int) -> np.ndarray:
    """``n`` points spread over the gaps between and beyond the intervals (excluding 0)."""
    gaps = []
    if intervals[0][0] > 0:
        gaps.append((0.0, intervals[0][0]))
    for (_, b), (a, _) in zip(intervals, intervals[1:]):
        gaps.append((b, a))
    top = intervals[-1][1]
    gaps.append((top, top + max(top - intervals[0][0], 1.0)))
    widths = np.array([b - a for a, b in gaps])
    counts = np.maximum(1, np.round(n * widths / widths.sum())).astype(int)
    pts = [a + (b - a) * (np.arange(k) + 0.5) / k for (a, b), k in zip(gaps, counts)]
    return np.concatenate(pts)[:n] if sum(counts) >= n else np.concatenate(pts)


def interior_samples(intervals, n: int, inset: float = 0.01) -> np.ndarray:
    widths = np.array([b - a for a, b in intervals])
    counts = np.maximum(1, np.round(n * widths / widths.sum())).astype(int)
    pts = []
    for (a, b), k in zip(intervals, counts):
        w = b - a
        pts.append(np.linspace(a + inset * w, b - inset * w, k + 2)[1:-1])
    return np.concatenate(pts)


def _cross_validate(H, c, intervals, opts):
    mids_in = np.array([(a + b) / 2 for a, b in intervals])
    mids_out = complement_samples(intervals, len(intervals) + 1)
    bad = []
    g_in = _density.density_on(H, c, np.sort(mids_in), opts)
    for x, f in zip(g_in.xs, g_in.f_under):
        if not f > 0:
            bad.append(f"zero density at support point {x:.6g}")
    g_out = _density.density_on(H, c, np.sort(mids_out), opts)
    for x, f in zip(g_out.xs, g_out.f_under):
        if f >= 1e-8:
            bad.append(f"density {f:.3e} at complement point {x:.6g}")
    return bad
