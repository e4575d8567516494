"""Measure integrals and diagnostic quantities at a point ``(z, mu, gu)``.

Here ``mu`` and ``gu`` are the companion transforms (m-underbar, g-underbar)
and every integral is a finite weighted sum over the atoms of ``H``.
All functions broadcast over array-valued ``mu``/``gu``; the atom axis is
appended last and summed out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularAtom
from .measure import JointMeasure

SINGULAR_THRESHOLD = 1e-300


@dataclass(frozen=True)
class SolutionTriple:
    z: complex
    mu: complex
    gu: complex
    c: float


@dataclass(frozen=True)
class Diagnostics:
    A1: float
    A2: float
    B0: float
    B1: float
    B2: float
    V0: float
    V: float
    identity_residual: float
    bound_margin: float

    def to_json(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


def denominators(H: JointMeasure, mu, gu) -> np.ndarray:
    """``1 + s*gu + t*mu`` with a trailing atom axis."""
    mu = np.asarray(mu, dtype=complex)[..., None]
    gu = np.asarray(gu, dtype=complex)[..., None]
    return 1.0 + H.s * gu + H.t * mu


def _checked_denominators(H, mu, gu):
    d = denominators(H, mu, gu)
    if np.any(np.abs(d) < SINGULAR_THRESHOLD):
        raise SingularAtom("1 + s*gu + t*mu vanishes for some atom")
    return d


def abs2_integrals(H: JointMeasure, mu, gu):
    """``(A1, A2, B0, B1, B2)``: integrals against ``dH / |1 + s gu + t mu|^2``.

    ``A_j`` carries ``s t^(j-1)`` and ``B_j`` carries ``t^j``.
    """
    d = _checked_denominators(H, mu, gu)
    q = H.w / (d.real ** 2 + d.imag ** 2)
    A1 = np.sum(q * H.s, axis=-1)
    A2 = np.sum(q * H.s * H.t, axis=-1)
    B0 = np.sum(q, axis=-1)
    B1 = np.sum(q * H.t, axis=-1)
    B2 = np.sum(q * H.t ** 2, axis=-1)
    return A1, A2, B0, B1, B2


def signed_integrals(H: JointMeasure, mu, gu):
    """``(Ahat1, Ahat2, Bhat1, Bhat2, I0, I_t)``.

    The hatted integrals use the squared (not modulus-squared) denominator
    and are the Jacobian entries of the residual map; ``I0`` and ``I_t`` are
    the plain integrals of ``1`` and ``t`` against ``dH / (1 + s gu + t mu)``.
    """
    d = _checked_denominators(H, mu, gu)
    r = H.w / d
    r2 = r / d
    Ah1 = np.sum(r2 * H.s, axis=-1)
    Ah2 = np.sum(r2 * H.s * H.t, axis=-1)
    Bh1 = np.sum(r2 * H.t, axis=-1)
    Bh2 = np.sum(r2 * H.t ** 2, axis=-1)
    I0 = np.sum(r, axis=-1)
    It = np.sum(r * H.t, axis=-1)
    return Ah1, Ah2, Bh1, Bh2, I0, It


def diagnostics(H: JointMeasure, triple: SolutionTriple) -> Diagnostics:
    """Evaluate the bound quantities ``V0``, ``V`` and the imaginary-part identity.

    At an exact solution with ``Im z > 0``::

        Im(mu)|z|^2 = V^2 Im(mu) + (V c A1 + c^2 A1 B1) v / V0 + (1 - c) v + c B0 v

    and ``identity_residual`` is the absolute difference of the two sides.
    ``V`` is reported as ``inf`` (margin ``-inf``) when ``V0 <= 0``.
    """
    z, mu, gu, c = complex(triple.z), complex(triple.mu), complex(triple.gu), float(triple.c)
    if not all(np.isfinite([z, mu, gu])):
        raise ValueError("triple must be finite")
    if z.imag < 0:
        raise ValueError("diagnostics need Im z >= 0")
    A1, A2, B0, B1, B2 = (float(x) for x in abs2_integrals(H, mu, gu))
    V0 = 1.0 / abs(gu) ** 2 - c * A2
    v = z.imag
    if V0 > 0:
        V = c * c * A1 * B2 / V0 + c * B1
        rhs = V * V * mu.imag + (V * c * A1 + c * c * A1 * B1) * v / V0 + (1 - c) * v + c * B0 * v
        resid = abs(mu.imag * abs(z) ** 2 - rhs)
        margin = abs(z) - V
    else:
        V = np.inf
        resid = np.inf
        margin = -np.inf
    return Diagnostics(A1, A2, B0, B1, B2, V0, V, resid, margin)
