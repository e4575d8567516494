import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from specden.errors import SingularAtom
from specden.kernel import SolutionTriple, abs2_integrals, diagnostics, signed_integrals
from specden.measure import make_measure, marchenko_pastur

MP = marchenko_pastur()


def test_abs2_examples():
    A1, A2, B0, B1, B2 = abs2_integrals(MP, 1j, 1j)
    assert (A1, A2) == (0.0, 0.0)
    assert np.allclose([B0, B1, B2], 0.5, rtol=0, atol=1e-15)


def test_singular_atom():
    H = make_measure([(1, 1, 1)])
    with pytest.raises(SingularAtom):
        abs2_integrals(H, -1.0, 0.0)
    with pytest.raises(SingularAtom):
        signed_integrals(H, -1.0, 0.0)


def test_signed_examples():
    Ah1, Ah2, Bh1, Bh2, I0, It = signed_integrals(MP, 1j, 1j)
    assert abs(I0 - (0.5 - 0.5j)) < 1e-15
    assert abs(Bh1 - (-0.5j)) < 1e-15


reals = st.floats(-0.3, 3.0, allow_nan=False)


@given(st.lists(st.tuples(st.floats(0, 3), st.floats(0.1, 3), st.floats(0.1, 1)), min_size=1, max_size=5),
       reals, reals)
def test_signed_equals_unsigned_for_real_positive_denominators(atoms, mu, gu):
    tot = sum(a[2] for a in atoms)
    H = make_measure([(s, t, w / tot) for s, t, w in atoms])
    A1, A2, B0, B1, B2 = abs2_integrals(H, mu, gu)
    Ah1, Ah2, Bh1, Bh2, _, _ = signed_integrals(H, mu, gu)
    for a, b in [(A1, Ah1), (A2, Ah2), (B1, Bh1), (B2, Bh2)]:
        assert abs(complex(b).imag) == 0
        assert np.isclose(a, complex(b).real, rtol=1e-13, atol=0)


@given(st.lists(st.tuples(st.floats(0, 3), st.floats(0.1, 3), st.floats(0.1, 1)), min_size=1, max_size=5),
       st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5))
def test_cauchy_schwarz(atoms, mu, gu):
    tot = sum(a[2] for a in atoms)
    H = make_measure([(s, t, w / tot) for s, t, w in atoms])
    d2 = np.abs(1 + H.s * gu + H.t * mu) ** 2
    if d2.min() < 1e-8:
        return
    A1, A2, *_ = abs2_integrals(H, mu, gu)
    bound = np.sum(H.w * H.s / H.t / d2) * A2
    assert A1 ** 2 <= bound * (1 + 1e-12) + 1e-300


def test_diagnostics_at_mp_solution():
    z = 4j
    mu = oracles.mp_mu(z, 1.0)
    d = diagnostics(MP, SolutionTriple(z, mu, mu, 1.0))
    assert d.identity_residual < 1e-10
    assert d.V < abs(z) and d.bound_margin > 0 and d.V0 > 0


def test_diagnostics_hand_evaluation():
    # mu = gu = i, z = i: |d|^2 = 2, so B_j = 1/2, A_j = 0, V0 = 1, V = 1/2
    # rhs = V^2 + c B0 = 1/4 + 1/2, lhs = Im(mu)|z|^2 = 1
    d = diagnostics(MP, SolutionTriple(1j, 1j, 1j, 1.0))
    assert d.V0 == 1.0 and d.V == 0.5
    assert abs(d.identity_residual - 0.25) < 1e-15


def test_diagnostics_nonpositive_v0():
    H = make_measure([(1, 1, 1)])
    d = diagnostics(H, SolutionTriple(1j, -1 - 1.99j, 2j, 1.0))
    assert d.V0 <= 0 and d.V == np.inf and d.bound_margin == -np.inf


def test_diagnostics_preconditions():
    with pytest.raises(ValueError):
        diagnostics(MP, SolutionTriple(-1j, 1j, 1j, 1.0))
    with pytest.raises(ValueError):
        diagnostics(MP, SolutionTriple(1j, complex("nan"), 1j, 1.0))
