"""Atomic joint measures H(s, t) over (noncentrality, noise) eigenvalue pairs."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BadBounds, EmptyMeasure, NegativeValue, WeightSumMismatch, ZeroNoiseAtom

WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class JointMeasure:
    """Probability measure placing weight ``w[k]`` on the pair ``(s[k], t[k])``.

    ``s`` are eigenvalues of ``R R*/N`` and ``t`` the paired eigenvalues of
    ``T``. Instances are immutable; the arrays are flagged read-only.
    """

    s: np.ndarray
    t: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        for name in ("s", "t", "w"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def atoms(self) -> list[tuple[float, float, float]]:
        return [(float(a), float(b), float(c)) for a, b, c in zip(self.s, self.t, self.w)]

    def __len__(self):
        return len(self.w)

    def __eq__(self, other):
        if not isinstance(other, JointMeasure):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in "stw")

    def __hash__(self):
        return hash((self.s.tobytes(), self.t.tobytes(), self.w.tobytes()))

    def to_json(self) -> dict:
        return {"atoms": [{"s": s, "t": t, "w": w} for s, t, w in self.atoms]}

    @property
    def scale(self) -> float:
        """Rough spectral scale, used to size grids and scan ranges."""
        return float(max(np.max(self.t), np.max(self.s), 1e-12))


@dataclass(frozen=True)
class MeasureReport:
    lambda_minus1: float
    lambda_plus1: float
    rsn_integral: float
    rsn_ok: bool


def make_measure(atoms: Iterable[Sequence[float]]) -> JointMeasure:
    """Validate ``(s, t, w)`` triples and build a :class:`JointMeasure`.

    Weights summing to 1 within 1e-9 are renormalized exactly; anything
    further off is rejected.
    """
    rows = [tuple(a) for a in atoms]
    if not rows:
        raise EmptyMeasure("a measure needs at least one atom")
    if any(len(r) != 3 for r in rows):
        raise ValueError("atoms must be (s, t, w) triples")
    arr = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NegativeValue("atom values must be finite")
    s, t, w = arr.T
    if np.any(s < 0) or np.any(t < 0):
        raise NegativeValue("s and t must be nonnegative")
    if np.any(w <= 0):
        raise NegativeValue("weights must be positive")
    total = math.fsum(w)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise WeightSumMismatch(f"weights sum to {total!r}, expected 1")
    return JointMeasure(s, t, w / total)


def report(H: JointMeasure, c: float) -> MeasureReport:
    """Moments entering the boundedness and signal-to-noise conditions."""
    lam_plus = math.sqrt(math.fsum(H.w * H.t))
    if np.any(H.t == 0):
        lam_minus = math.inf
        rsn = math.inf
    else:
        lam_minus = math.sqrt(math.fsum(H.w / H.t))
        rsn = math.fsum(H.w * H.s / H.t)
    return MeasureReport(
        lambda_minus1=lam_minus,
        lambda_plus1=lam_plus,
        rsn_integral=rsn,
        rsn_ok=bool(rsn <= 1.0 / c),
    )


def to_tilted(H: JointMeasure) -> JointMeasure:
    """Map each atom ``(s, t, w)`` to ``(s/t, t, w)``.

    This is the change of variables between the ``C_n`` form
    ``(1/N) T^{1/2}(T^{-1/2}R + X)(...)^* T^{1/2}`` and the ``B_n`` form.
    """
    if np.any(H.t == 0):
        raise ZeroNoiseAtom("tilting requires every t > 0")
    return JointMeasure(H.s / H.t, H.t, H.w)


def truncate(H: JointMeasure, tau: float, eps: float) -> JointMeasure:
    """Clip ``s`` at ``tau`` and ``t`` into ``[eps, tau]``."""
    if not (0 < eps < tau):
        raise BadBounds(f"need 0 < eps < tau, got eps={eps}, tau={tau}")
    return JointMeasure(np.minimum(H.s, tau), np.maximum(eps, np.minimum(H.t, tau)), H.w)


def marchenko_pastur() -> JointMeasure:
    """``R = 0``, ``T = I``."""
    return make_measure([(0.0, 1.0, 1.0)])


def dozier_silverstein(s_values: Sequence[float], sigma2: float) -> JointMeasure:
    """Equally weighted signal eigenvalues with white noise ``T = sigma2 I``."""
    s_values = list(s_values)
    if not s_values:
        raise EmptyMeasure("need at least one signal eigenvalue")
    w = 1.0 / len(s_values)
    return make_measure([(s, sigma2, w) for s in s_values])


def from_json(data: dict) -> JointMeasure:
    try:
        atoms = [(a["s"], a["t"], a["w"]) for a in data["atoms"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed measure JSON: {exc}") from exc
    return make_measure(atoms)


def load(path: str | Path) -> JointMeasure:
    with open(path) as fh:
        return from_json(json.load(fh))
