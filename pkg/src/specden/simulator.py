"""Finite-n information-plus-noise matrices and their spectra.

``B = (1/N) Y Y*`` with ``Y = R + T^{1/2} X``. By default ``R`` and ``T`` are
diagonal in the same basis; ``rotate`` conjugates both by a random
orthogonal (or unitary) matrix so the commutation assumption still holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, special, stats

from .cdf import StepCDF
from .errors import BudgetExceeded, ConfigParse, DimensionMismatch, EigensolveFailure
from .measure import JointMeasure, from_json, make_measure, marchenko_pastur

ENTRY_DISTS = ("real-gaussian", "complex-gaussian", "rademacher", "heavy-tail", "degenerate")
DEFAULT_BUDGET = 64_000_000
EIG_FLOOR = -1e-10

# stream identifiers, so each purpose draws from its own counter-based stream
_STREAM_X = 1
_STREAM_U = 2
_STREAM_V = 3


@dataclass(frozen=True)
class ModelSpec:
    n: int
    N: int
    measure: JointMeasure
    entry_dist: str = "real-gaussian"
    seed: int = 0
    rotate: bool = False
    entry_truncation: Optional[float] = None
    df: float = 5.0  # degrees of freedom for heavy-tail entries

    def __post_init__(self):
        if self.entry_dist == "standardized-heavy-tail":
            object.__setattr__(self, "entry_dist", "heavy-tail")
        if int(self.n) != self.n or int(self.N) != self.N or self.n < 1 or self.N < 1:
            raise ValueError("n and N must be positive integers")
        if self.entry_dist not in ENTRY_DISTS:
            raise ValueError(f"entry_dist must be one of {ENTRY_DISTS}")
        if self.entry_dist == "heavy-tail" and not self.df > 2:
            raise ValueError("heavy-tail entries need df > 2 for unit variance")
        if self.entry_truncation is not None and not self.entry_truncation > 0:
            raise ValueError("entry_truncation must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def c(self) -> float:
        return self.n / self.N

    @property
    def is_complex(self) -> bool:
        return self.entry_dist == "complex-gaussian"

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "N": self.N,
            "measure": self.measure.to_json(),
            "entry_dist": self.entry_dist,
            "seed": int(self.seed),
            "rotate": self.rotate,
            "entry_truncation": self.entry_truncation,
            "df": self.df,
        }


def spec_from_json(data: dict) -> ModelSpec:
    try:
        m = data["measure"]
        if m == "mp":
            H = marchenko_pastur()
        elif isinstance(m, dict):
            H = from_json(m)
        else:
            H = make_measure(m)
        return ModelSpec(
            n=int(data["n"]),
            N=int(data["N"]),
            measure=H,
            entry_dist=data.get("entry_dist", "real-gaussian"),
            seed=int(data.get("seed", 0)),
            rotate=bool(data.get("rotate", False)),
            entry_truncation=data.get("entry_truncation"),
            df=float(data.get("df", 5.0)),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigParse(f"bad model spec: {exc}") from exc


@dataclass(frozen=True)
class SpectralSample:
    eigs_B: np.ndarray
    eigs_B_under: np.ndarray
    spec: ModelSpec = field(repr=False)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), stream])))


def assign_coordinates(H: JointMeasure, n: int):
    """Per-coordinate ``(s, t)`` with atom counts by largest-remainder rounding of ``n*w``."""
    quota = H.w * n
    counts = np.floor(quota).astype(int)
    short = n - counts.sum()
    if short:
        order = np.argsort(-(quota - counts), kind="stable")
        counts[order[:short]] += 1
    return np.repeat(H.s, counts), np.repeat(H.t, counts)


def _haar(rng, k, complex_):
    g = rng.standard_normal((k, k))
    if complex_:
        g = (g + 1j * rng.standard_normal((k, k))) / math.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def build_model(spec: ModelSpec):
    """``(R, T_half)`` for a ModelSpec; R is ``n x N``, T_half is ``n x n``."""
    n, N = spec.n, spec.N
    s, t = assign_coordinates(spec.measure, n)
    if n > N:
        # only N diagonal slots exist; put the signal coordinates there
        nz = np.flatnonzero(s > 0)
        if nz.size > N:
            raise DimensionMismatch(f"{nz.size} nonzero signal eigenvalues but only N={N} columns")
        order = np.concatenate([nz, np.flatnonzero(s == 0)])
        s, t = s[order], t[order]
    dtype = complex if spec.is_complex else float
    R = np.zeros((n, N), dtype=dtype)
    k = min(n, N)
    R[np.arange(k), np.arange(k)] = math.sqrt(N) * np.sqrt(s[:k])
    T_half = np.diag(np.sqrt(t)).astype(dtype)
    if spec.rotate:
        U = _haar(_rng(spec.seed, _STREAM_U), n, spec.is_complex)
        V = _haar(_rng(spec.seed, _STREAM_V), N, spec.is_complex)
        R = U @ R @ V
        T_half = U @ T_half @ U.conj().T
    return R, T_half


def _truncated_variance(dist: str, a: float, df: float) -> float:
    """``E|x|^2 1{|x| < a}`` for a standardized entry (all laws here are symmetric)."""
    if dist == "real-gaussian":
        return float(special.erf(a / math.sqrt(2)) - 2 * a * stats.norm.pdf(a))
    if dist == "complex-gaussian":
        return float(1 - math.exp(-a * a) * (1 + a * a))
    if dist == "rademacher":
        return 1.0 if a > 1 else 0.0
    if dist == "heavy-tail":
        scale = math.sqrt(df / (df - 2))
        val, _ = integrate.quad(lambda y: (y / scale) ** 2 * stats.t.pdf(y, df), -a * scale, a * scale)
        return float(val)
    return 0.0


def _draw(rng, spec: ModelSpec, shape):
    dist = spec.entry_dist
    if dist == "real-gaussian":
        return rng.standard_normal(shape)
    if dist == "complex-gaussian":
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    if dist == "rademacher":
        return rng.choice(np.array([-1.0, 1.0]), size=shape)
    if dist == "heavy-tail":
        return rng.standard_t(spec.df, size=shape) / math.sqrt(spec.df / (spec.df - 2))
    return np.zeros(shape)


def draw_entries(spec: ModelSpec) -> np.ndarray:
    """The ``n x N`` noise matrix X, truncated at ``eta * sqrt(n)`` when requested.

    Truncated entries are recentred (the laws are symmetric, so the mean is
    already 0) and divided by the analytic truncated standard deviation. If
    that variance falls below 1/2 the entries are replaced by Rademacher
    draws, which are standardized and bounded.
    """
    rng = _rng(spec.seed, _STREAM_X)
    X = _draw(rng, spec, (spec.n, spec.N))
    eta = spec.entry_truncation
    if eta is None or spec.entry_dist == "degenerate":
        return X
    a = eta * math.sqrt(spec.n)
    var = _truncated_variance(spec.entry_dist, a, spec.df)
    if var < 0.5:
        return rng.choice(np.array([-1.0, 1.0]), size=(spec.n, spec.N))
    X = np.where(np.abs(X) < a, X, 0)
    return X / math.sqrt(var)


def sample_eigenvalues(
    spec: ModelSpec, budget: int = DEFAULT_BUDGET, direct_under: bool = False
) -> SpectralSample:
    """Eigenvalues of ``B`` and of its companion ``(1/N) Y* Y``.

    The companion spectrum is ``eigs_B`` padded with ``N - n`` zeros (or with
    its ``n - N`` zeros removed when ``n > N``) unless ``direct_under`` asks
    for a separate ``N x N`` eigensolve.
    """
    n, N = spec.n, spec.N
    if n * N > budget:
        raise BudgetExceeded(f"n*N = {n * N} exceeds budget {budget}")
    R, T_half = build_model(spec)
    Y = R + T_half @ draw_entries(spec)
    try:
        eB = _eigs(Y @ Y.conj().T / N)
        if n > N:
            # rank(B) <= N, so the n - N smallest eigenvalues are zero exactly
            eB[: n - N] = 0.0
        if direct_under:
            eBu = _eigs(Y.conj().T @ Y / N)
        elif n > N:
            eBu = eB[n - N:].copy()
        else:
            eBu = np.sort(np.concatenate([eB, np.zeros(N - n)]))
    except np.linalg.LinAlgError as exc:
        raise EigensolveFailure(str(exc)) from exc
    return SpectralSample(eigs_B=eB, eigs_B_under=eBu, spec=spec)


def _eigs(M):
    e = np.linalg.eigvalsh(M)
    if not np.all(np.isfinite(e)):
        raise EigensolveFailure("non-finite eigenvalues")
    floor = EIG_FLOOR * max(1.0, float(e[-1]))
    if e[0] < floor:
        raise EigensolveFailure(f"eigenvalue {e[0]:.3e} of a Gram matrix is below {floor:.1e}")
    return np.sort(np.clip(e, 0.0, None))


def esd(sample: SpectralSample, which: str = "B") -> StepCDF:
    if which == "B":
        return StepCDF(sample.eigs_B)
    if which in ("B_under", "B_"):
        return StepCDF(sample.eigs_B_under)
    raise ValueError("which must be 'B' or 'B_under'")
