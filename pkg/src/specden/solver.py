"""Solve the companion system for ``(mu, gu)`` = (m-underbar(z), g-underbar(z)).

The system, written as residuals::

    Gm = z*mu + (1 - c) + c * int dH / (1 + s*gu + t*mu)
    Gg = z + 1/gu - c * int t dH / (1 + s*gu + t*mu)

is solved by damped fixed-point iteration with a guarded Newton polish.
Boundary values on the real axis are reached by continuation down a
descending path of imaginary parts followed by a Newton solve at ``v = 0``.

Every routine here is a thin wrapper around :func:`_engine`, which runs the
iteration on whole arrays of points at once with per-point masks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernel
from .errors import (
    ContinuationStall,
    DegenerateG,
    DivergedToPole,
    NegativeImaginaryDrift,
    NotConverged,
    SingularAtom,
    ZeroGu,
    ZeroZ,
)
from .kernel import Diagnostics, SolutionTriple
from .measure import JointMeasure

log = logging.getLogger(__name__)

MIN_DAMPING = 1.0 / 64


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 5000
    direct_iter: int = 200
    tol: float = 1e-12
    damping: float = 0.5
    newton_polish: bool = True
    v_path: Optional[tuple] = None
    boundary_tol: float = 1e-10
    v_floor: float = 1e-7
    v_ratio: float = 0.5

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.v_path is not None:
            vp = tuple(float(v) for v in self.v_path)
            if any(v <= 0 for v in vp) or any(b >= a for a, b in zip(vp, vp[1:])):
                raise ValueError("v_path must be positive and strictly decreasing")
            object.__setattr__(self, "v_path", vp)

    def path_for(self, x: float) -> np.ndarray:
        """Continuation imaginary parts used for the real point ``x``."""
        if self.v_path is not None:
            return np.asarray(self.v_path)
        top = max(1.0, abs(x))
        k = int(np.ceil(np.log(self.v_floor / top) / np.log(self.v_ratio)))
        return top * self.v_ratio ** np.arange(k + 1)


@dataclass(frozen=True)
class SolveResult:
    triple: SolutionTriple
    residual_norm: float
    iterations: int
    converged: bool
    diagnostics: Optional[Diagnostics] = field(default=None, compare=False)

    @property
    def mu(self) -> complex:
        return self.triple.mu

    @property
    def gu(self) -> complex:
        return self.triple.gu

    @property
    def companion(self) -> tuple[complex, complex]:
        """``(m, g)`` for the original ``B_n`` form of the system."""
        t = self.triple
        return to_companion(t.mu, t.gu, t.z, t.c)


# ---------------------------------------------------------------------------
# pointwise maps


def _check_c(c):
    if not 0 < c <= 1:
        raise ValueError(f"c must lie in (0, 1], got {c}")


def residuals(H: JointMeasure, c: float, z, mu, gu):
    """``(Gm, Gg)``; both vanish exactly at solutions."""
    if np.any(np.asarray(gu) == 0):
        raise ZeroGu("gu must be nonzero")
    _, _, _, _, I0, It = kernel.signed_integrals(H, mu, gu)
    Gm = z * np.asarray(mu) + (1 - c) + c * I0
    Gg = z + 1.0 / np.asarray(gu) - c * It
    return _unwrap(Gm), _unwrap(Gg)


def jacobian(H: JointMeasure, c: float, z, mu, gu):
    """Analytic partials ``[[dGm/dmu, dGm/dgu], [dGg/dmu, dGg/dgu]]``."""
    if np.any(np.asarray(gu) == 0):
        raise ZeroGu("gu must be nonzero")
    Ah1, Ah2, Bh1, Bh2, _, _ = kernel.signed_integrals(H, mu, gu)
    gu = np.asarray(gu, dtype=complex)
    return np.array(
        [[z - c * Bh1, -c * Ah1], [c * Bh2, -1.0 / gu ** 2 + c * Ah2]]
    )


def picard_step(H: JointMeasure, c: float, z, mu, gu, damping: float = 0.5):
    """One damped fixed-point update of ``(mu, gu)``."""
    if z == 0:
        raise ValueError("z must be nonzero")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    _, _, _, _, I0, It = kernel.signed_integrals(H, mu, gu)
    with np.errstate(divide="ignore", invalid="ignore"):
        cand_mu = (-(1 - c) - c * I0) / z
        cand_gu = -1.0 / (z - c * It)
    if not (np.all(np.isfinite(cand_mu)) and np.all(np.isfinite(cand_gu))):
        raise DivergedToPole("fixed-point candidate is not finite")
    new_mu = (1 - damping) * mu + damping * cand_mu
    new_gu = (1 - damping) * gu + damping * cand_gu
    return _unwrap(new_mu), _unwrap(new_gu)


def to_companion(mu, gu, z, c):
    """``(mu, gu) -> (m, g)``, inverting the change of variables."""
    if np.any(np.asarray(z) == 0):
        raise ZeroZ("z must be nonzero")
    if np.any(np.asarray(gu) == 0):
        raise ZeroGu("gu must be nonzero")
    m = (mu + (1 - c) / z) / c
    g = (-1.0 / (z * gu) - 1.0) / c
    return m, g


def from_companion(m, g, z, c):
    """``(m, g) -> (mu, gu)``."""
    if np.any(np.asarray(z) == 0):
        raise ZeroZ("z must be nonzero")
    mu = -(1 - c) / z + c * m
    gu = -1.0 / (z * (1 + c * g))
    return mu, gu


def residuals_second(H: JointMeasure, c: float, z, m, g):
    """Residuals of the ``(m, g)`` system in its original variables."""
    one_cg = 1 + c * np.asarray(g, dtype=complex)
    if np.any(np.abs(one_cg) < kernel.SINGULAR_THRESHOLD):
        raise DegenerateG("1 + c*g vanishes")
    m_ = np.asarray(m, dtype=complex)[..., None]
    den = H.s / one_cg[..., None] - (1 + c * m_ * H.t) * np.asarray(z)[..., None] + H.t * (1 - c)
    if np.any(np.abs(den) < kernel.SINGULAR_THRESHOLD):
        raise SingularAtom("denominator of the (m, g) system vanishes")
    R1 = np.asarray(m) - np.sum(H.w / den, axis=-1)
    R2 = np.asarray(g) - np.sum(H.w * H.t / den, axis=-1)
    return _unwrap(R1), _unwrap(R2)


def _unwrap(x):
    x = np.asarray(x)
    return complex(x) if x.ndim == 0 else x


# ---------------------------------------------------------------------------
# vectorized engine


def _evaluate(H, c, z, mu, gu):
    """Residuals, fixed-point candidates and Jacobian at 1-D arrays of points."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        d = 1.0 + H.s * gu[:, None] + H.t * mu[:, None]
        r = H.w / d
        I0 = r.sum(axis=1)
        It = (r * H.t).sum(axis=1)
        Gm = z * mu + (1 - c) + c * I0
        Gg = z + 1.0 / gu - c * It
    return d, r, I0, It, Gm, Gg


def _resnorm(Gm, Gg, z):
    with np.errstate(invalid="ignore"):
        r = np.maximum(np.abs(Gm), np.abs(Gg)) / np.maximum(1.0, np.abs(z))
    return np.where(np.isfinite(r), r, np.inf)


def _residual_only(H, c, z, mu, gu):
    _, _, _, _, Gm, Gg = _evaluate(H, c, z, mu, gu)
    return _resnorm(Gm, Gg, z)


def _admissible(mu, gu, z, slack):
    """Branch guard: upper half-plane for Im z > 0, near-real allowed on the axis."""
    interior = z.imag > 0
    with np.errstate(invalid="ignore", over="ignore"):
        ok_int = (mu.imag > 0) & (gu.imag > 0) & ((z * mu).imag > 0) & ((z * gu).imag >= 0)
    ok_bnd = (mu.imag >= -slack) & (gu.imag >= -slack)
    return np.where(interior, ok_int, ok_bnd) & np.isfinite(mu) & np.isfinite(gu) & (gu != 0)


@dataclass
class _Batch:
    mu: np.ndarray
    gu: np.ndarray
    res: np.ndarray
    iters: np.ndarray
    converged: np.ndarray
    drift: np.ndarray


def _engine(H, c, z, mu, gu, opts: SolverOptions, tol: float, max_iter=None) -> _Batch:
    z = np.asarray(z, dtype=complex).ravel()
    mu = np.array(mu, dtype=complex).ravel()
    gu = np.array(gu, dtype=complex).ravel()
    n = z.size
    res = _residual_only(H, c, z, mu, gu)
    damp = np.full(n, opts.damping)
    iters = np.zeros(n, dtype=int)
    drift = np.zeros(n, dtype=bool)
    slack = opts.boundary_tol
    tol = np.broadcast_to(np.asarray(tol, dtype=float), (n,))

    for _ in range(opts.max_iter if max_iter is None else max_iter):
        idx = np.flatnonzero((res > tol) & ~drift)
        if idx.size == 0:
            break
        zi, mi, gi, ri = z[idx], mu[idx], gu[idx], res[idx]
        iters[idx] += 1
        d, r, I0, It, Gm, Gg = _evaluate(H, c, zi, mi, gi)
        new_m, new_g, new_r = mi.copy(), gi.copy(), ri.copy()
        done = np.zeros(idx.size, dtype=bool)

        if opts.newton_polish:
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                r2 = r / d
                Ah1 = (r2 * H.s).sum(axis=1)
                Ah2 = (r2 * H.s * H.t).sum(axis=1)
                Bh1 = (r2 * H.t).sum(axis=1)
                Bh2 = (r2 * H.t ** 2).sum(axis=1)
                Jmm = zi - c * Bh1
                Jmg = -c * Ah1
                Jgm = c * Bh2
                Jgg = -1.0 / gi ** 2 + c * Ah2
                det = Jmm * Jgg - Jmg * Jgm
                dm = (Gm * Jgg - Gg * Jmg) / det
                dg = (Jmm * Gg - Jgm * Gm) / det
                nm = mi - dm
                ng = gi - dg
            rn = _residual_only(H, c, zi, nm, ng)
            ok = (rn < ri) & _admissible(nm, ng, zi, slack)
            new_m[ok], new_g[ok], new_r[ok] = nm[ok], ng[ok], rn[ok]
            done |= ok

        rest = ~done
        if rest.any():
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                pm = (-(1 - c) - c * I0[rest]) / zi[rest]
                pg = -1.0 / (zi[rest] - c * It[rest])
            dp = damp[idx][rest]
            cm = mi[rest] + dp * (pm - mi[rest])
            cg = gi[rest] + dp * (pg - gi[rest])
            rp = _residual_only(H, c, zi[rest], cm, cg)
            better = (rp < ri[rest]) & _admissible(cm, cg, zi[rest], slack)
            take = (better | (dp <= MIN_DAMPING)) & np.isfinite(rp)
            sub = np.flatnonzero(rest)
            new_m[sub[take]], new_g[sub[take]], new_r[sub[take]] = cm[take], cg[take], rp[take]
            damp[idx[sub]] = np.where(better, opts.damping, np.maximum(dp / 2, MIN_DAMPING))
            bad = take & (zi[rest].imag > 0) & (cm.imag < -tol[idx][rest])
            drift[idx[sub[bad]]] = True

        mu[idx], gu[idx], res[idx] = new_m, new_g, new_r

    return _Batch(mu, gu, res, iters, res <= tol, drift)


# ---------------------------------------------------------------------------
# public solvers


def _result(H, c, z, mu, gu, res, iters, converged, with_diag=True):
    triple = SolutionTriple(complex(z), complex(mu), complex(gu), float(c))
    diag = None
    if with_diag:
        try:
            diag = kernel.diagnostics(H, triple)
        except (SingularAtom, ValueError):
            diag = None
    return SolveResult(triple, float(res), int(iters), bool(converged), diag)


def solve_at(
    H: JointMeasure,
    c: float,
    z: complex,
    init: Optional[tuple] = None,
    opts: SolverOptions = SolverOptions(),
) -> SolveResult:
    """Solve at a single ``z`` with ``Im z >= 0``.

    Starts from ``init`` or ``mu = gu = -1/z``. Raises
    :class:`NegativeImaginaryDrift` if an iterate leaves the upper half-plane
    and :class:`NotConverged` when the budget runs out; both carry the best
    iterate as ``.best``.
    """
    _check_c(c)
    z = complex(z)
    if z == 0:
        raise ValueError("z must be nonzero")
    if z.imag < 0:
        raise ValueError("solve_at needs Im z >= 0")
    mu0, gu0 = init if init is not None else (-1.0 / z, -1.0 / z)
    b = _solve_points(H, c, np.array([z]), np.array([mu0]), np.array([gu0]), opts)
    out = _result(H, c, z, b.mu[0], b.gu[0], b.res[0], b.iters[0], b.converged[0])
    if not b.converged[0]:
        if b.drift[0]:
            raise NegativeImaginaryDrift(f"iterate left the upper half-plane at z={z}", best=out)
        raise NotConverged(f"no convergence at z={z}: residual {b.res[0]:.3e}", best=out)
    return out


def solve_many(H: JointMeasure, c: float, zs, init=None, opts: SolverOptions = SolverOptions()):
    """Vectorized :func:`solve_at`; returns ``(mu, gu, residual, converged)`` arrays.

    Failures are reported through the ``converged`` mask instead of raising.
    """
    _check_c(c)
    zs = np.asarray(zs, dtype=complex).ravel()
    if np.any(zs == 0) or np.any(zs.imag < 0):
        raise ValueError("points must be nonzero with Im z >= 0")
    if init is None:
        mu0 = gu0 = -1.0 / zs
    else:
        mu0, gu0 = (np.broadcast_to(np.asarray(a, dtype=complex), zs.shape) for a in init)
    b = _solve_points(H, c, zs, mu0, gu0, opts)
    return b.mu, b.gu, b.res, b.converged


def _solve_points(H, c, z, mu0, gu0, opts: SolverOptions) -> _Batch:
    """Direct iteration from the given seeds, then v-continuation for stragglers.

    Points that have not converged after ``opts.direct_iter`` iterations are
    restarted from their current iterate at ``Re z + i*max(1, 4|z|)`` and
    continued geometrically down to ``Im z``. Boundary points (``Im z = 0``)
    get the direct pass only.
    """
    z = np.asarray(z, dtype=complex)
    interior = z.imag > 0
    tol = np.where(interior, opts.tol, opts.boundary_tol)
    b = _engine(H, c, z, mu0, gu0, opts, tol, max_iter=opts.direct_iter)
    b.converged = (b.res <= tol) & ~b.drift
    redo = np.flatnonzero(~b.converged & interior)
    if redo.size:
        zr = z[redo]
        top = np.maximum(1.0, 4 * np.abs(zr))
        k = int(np.ceil(np.log2(np.max(top / zr.imag))))
        mu = b.mu[redo].copy()
        gu = b.gu[redo].copy()
        z_top = zr.real + 1j * top
        fresh = ~_admissible(mu, gu, z_top, 0.0)
        mu[fresh] = gu[fresh] = -1.0 / z_top[fresh]
        iters = b.iters[redo].copy()
        for j in range(k + 1):
            v = np.maximum(top * 0.5 ** j, zr.imag)
            lvl = _engine(H, c, zr.real + 1j * v, mu, gu, opts, opts.tol)
            mu, gu = lvl.mu, lvl.gu
            iters += lvl.iters
        b.mu[redo], b.gu[redo], b.res[redo] = mu, gu, lvl.res
        b.drift[redo] = lvl.drift
        b.iters[redo] = iters
        b.converged[redo] = (lvl.res <= opts.tol) & ~lvl.drift
    return b


def _descend(H, c, x, mu, gu, v_from, v_to, opts):
    """Move one continuation level from ``v_from`` to ``v_to``, shrinking steps on failure."""
    v_cur, target = v_from, v_to
    while True:
        b = _engine(H, c, [complex(x, target)], [mu], [gu], opts, opts.tol)
        if b.converged[0] and not b.drift[0]:
            mu, gu = b.mu[0], b.gu[0]
            if target == v_to:
                return mu, gu, b.res[0], int(b.iters[0])
            v_cur, target = target, v_to
            continue
        step = v_cur - target
        new_target = np.sqrt(v_cur * target)
        if step / 2 < 1e-3 * v_cur or new_target >= v_cur:
            raise ContinuationStall(f"continuation stalled at x={x}, v={v_cur:.3e}")
        target = new_target


def solve_path(
    H: JointMeasure,
    c: float,
    x: float,
    opts: SolverOptions = SolverOptions(),
    boundary: bool = True,
) -> SolveResult:
    """Continue from ``x + i*v_path[0]`` down to the real axis at ``x``.

    The final Newton solve at ``v = 0`` is seeded by the smallest-``v``
    iterate; if it fails to converge or leaves the physical branch, the
    smallest-``v`` solution is returned instead (its ``triple.z`` then keeps
    the positive imaginary part).
    """
    _check_c(c)
    x = float(x)
    if x == 0:
        raise ValueError("x must be nonzero")
    path = opts.path_for(x)
    if path[-1] > 1e-6:
        raise ValueError("v_path must end at or below 1e-6")
    mu, gu = _path_batch(H, c, np.array([x]), path, opts)
    mu, gu = mu[0], gu[0]
    if np.isnan(mu):
        # lockstep batch failed; redo with adaptive step control
        z0 = complex(x, path[0])
        r = solve_at(H, c, z0, opts=opts)
        mu, gu, v_prev = r.mu, r.gu, path[0]
        for v in path[1:]:
            mu, gu, _, _ = _descend(H, c, x, mu, gu, v_prev, v, opts)
            v_prev = v
    z_last = complex(x, path[-1])
    res = _residual_only(H, c, np.array([z_last]), np.array([mu]), np.array([gu]))[0]
    last = (z_last, mu, gu, res)
    if boundary:
        b = _engine(H, c, [complex(x, 0.0)], [mu], [gu], opts, opts.boundary_tol, max_iter=opts.direct_iter)
        if b.converged[0] and _admissible(b.mu, b.gu, np.array([complex(x)]), opts.boundary_tol)[0]:
            return _result(H, c, complex(x), b.mu[0], b.gu[0], b.res[0], b.iters[0], True)
        log.debug("boundary Newton failed at x=%g; keeping v=%g iterate", x, path[-1])
    z, mu, gu, res = last
    return _result(H, c, z, mu, gu, res, 0, res <= opts.tol)


def _path_batch(H, c, xs, path, opts):
    """Lockstep continuation of many real points; NaN marks points that failed."""
    xs = np.asarray(xs, dtype=float)
    z = xs + 1j * path[0]
    mu = -1.0 / z
    gu = -1.0 / z
    alive = np.ones(xs.size, dtype=bool)
    for v in path:
        z = xs + 1j * v
        b = _engine(H, c, z[alive], mu[alive], gu[alive], opts, opts.tol)
        ok = b.converged & ~b.drift
        a = np.flatnonzero(alive)
        mu[a], gu[a] = b.mu, b.gu
        alive[a[~ok]] = False
    mu = np.where(alive, mu, np.nan)
    gu = np.where(alive, gu, np.nan)
    return mu, gu


def boundary_values(H: JointMeasure, c: float, xs, opts: SolverOptions = SolverOptions()):
    """Extended solutions at many real points, solved in one lockstep batch.

    Returns ``(mu, gu, residual, on_axis)`` where ``on_axis`` is False where
    the ``v = 0`` solve was abandoned and the smallest-``v`` value is kept.
    """
    _check_c(c)
    xs = np.asarray(xs, dtype=float).ravel()
    if np.any(xs == 0):
        raise ValueError("x must be nonzero")
    mu = np.full(xs.size, np.nan, dtype=complex)
    gu = np.full(xs.size, np.nan, dtype=complex)
    if opts.v_path is not None:
        groups = [(np.arange(xs.size), np.asarray(opts.v_path))]
    else:
        # share one path per distinct path length so the batch stays in lockstep
        tops = np.maximum(1.0, np.abs(xs))
        keys = np.ceil(np.log2(tops)).astype(int)
        groups = []
        for k in np.unique(keys):
            sel = np.flatnonzero(keys == k)
            groups.append((sel, opts.path_for(float(2.0 ** k))))
    v_last = np.empty(xs.size)
    for sel, path in groups:
        if path[-1] > 1e-6:
            raise ValueError("v_path must end at or below 1e-6")
        m, g = _path_batch(H, c, xs[sel], path, opts)
        mu[sel], gu[sel] = m, g
        v_last[sel] = path[-1]
    # fall back to adaptive continuation where the lockstep pass failed
    for i in np.flatnonzero(np.isnan(mu)):
        r = solve_path(H, c, xs[i], opts, boundary=False)
        mu[i], gu[i] = r.mu, r.gu
        v_last[i] = r.triple.z.imag

    b = _engine(H, c, xs.astype(complex), mu, gu, opts, opts.boundary_tol, max_iter=opts.direct_iter)
    on_axis = b.converged & _admissible(b.mu, b.gu, xs.astype(complex), opts.boundary_tol)
    res = np.where(on_axis, b.res, _residual_only(H, c, xs + 1j * v_last, mu, gu))
    mu = np.where(on_axis, b.mu, mu)
    gu = np.where(on_axis, b.gu, gu)
    return mu, gu, res, on_axis
