import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from specden import simulator
from specden.errors import BudgetExceeded, DimensionMismatch
from specden.measure import make_measure, marchenko_pastur
from specden.simulator import ModelSpec, assign_coordinates, build_model, draw_entries, esd, sample_eigenvalues

MP = marchenko_pastur()
TWO = make_measure([(1, 2, 0.5), (4, 1, 0.5)])


def test_build_model_mp():
    R, T_half = build_model(ModelSpec(4, 8, MP))
    assert not R.any() and np.array_equal(T_half, np.eye(4))


def test_largest_remainder_assignment():
    s, t = assign_coordinates(TWO, 4)
    assert list(zip(s, t)) == [(1, 2), (1, 2), (4, 1), (4, 1)]


@given(st.lists(st.floats(0.05, 1), min_size=1, max_size=6), st.integers(1, 300))
def test_assignment_reproduces_weights(ws, n):
    tot = sum(ws)
    H = make_measure([(float(i), 1.0, w / tot) for i, w in enumerate(ws)])
    s, _ = assign_coordinates(H, n)
    assert s.size == n
    for i, w in enumerate(H.w):
        assert abs(np.sum(s == i) / n - w) <= 1 / n


@pytest.mark.parametrize("dist", ["real-gaussian", "complex-gaussian"])
def test_rotation_keeps_commutation(dist):
    spec = ModelSpec(6, 9, TWO, rotate=True, seed=4, entry_dist=dist)
    R, T_half = build_model(spec)
    A = R @ R.conj().T / spec.N
    T = T_half @ T_half
    assert np.abs(A @ T - T @ A).max() < 1e-10
    assert np.allclose(np.sort(np.linalg.eigvalsh(A)), [1, 1, 1, 4, 4, 4])


def test_rotation_preserves_spectrum_law():
    a = sample_eigenvalues(ModelSpec(50, 100, TWO, seed=1))
    b = sample_eigenvalues(ModelSpec(50, 100, TWO, seed=1, rotate=True))
    # both models share H_n, so their spectra have the same law; E tr(B)/n = E[s + t] = 4
    assert abs(a.eigs_B.mean() - 4.0) < 0.3 and abs(b.eigs_B.mean() - 4.0) < 0.3


def test_mp_eigenvalues_in_range():
    s = sample_eigenvalues(ModelSpec(200, 200, MP, seed=7))
    assert s.eigs_B.min() >= -1e-10 and s.eigs_B.max() <= 4.6


def test_degenerate_entries_give_zero_spectrum():
    s = sample_eigenvalues(ModelSpec(5, 7, make_measure([(0, 1, 1)]), entry_dist="degenerate"))
    assert not s.eigs_B.any()


def test_companion_padding():
    s = sample_eigenvalues(ModelSpec(100, 200, MP, seed=2))
    assert s.eigs_B_under.size == 200
    assert np.sum(s.eigs_B_under == 0) >= 100
    d = sample_eigenvalues(ModelSpec(100, 200, MP, seed=2), direct_under=True)
    scale = d.eigs_B.max()
    assert np.abs(d.eigs_B_under - s.eigs_B_under).max() < 1e-8 * scale


def test_more_rows_than_columns():
    H = make_measure([(1, 2, 0.3), (0, 1, 0.7)])
    s = sample_eigenvalues(ModelSpec(30, 20, H, seed=3), direct_under=True)
    padded = np.sort(np.concatenate([s.eigs_B_under, np.zeros(10)]))
    assert np.abs(padded - s.eigs_B).max() < 1e-8 * s.eigs_B.max()
    with pytest.raises(DimensionMismatch):
        build_model(ModelSpec(30, 10, TWO))


def test_determinism():
    spec = ModelSpec(60, 90, TWO, seed=123, rotate=True, entry_dist="heavy-tail", df=4)
    a, b = sample_eigenvalues(spec), sample_eigenvalues(spec)
    assert np.array_equal(a.eigs_B, b.eigs_B)


def test_rotation_does_not_perturb_noise_draws():
    a = draw_entries(ModelSpec(10, 20, TWO, seed=5))
    b = draw_entries(ModelSpec(10, 20, TWO, seed=5, rotate=True))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("dist, eta", [("real-gaussian", 0.1), ("heavy-tail", 0.05), ("complex-gaussian", 0.1)])
def test_truncation_preserves_standardisation(dist, eta):
    spec = ModelSpec(300, 400, MP, seed=9, entry_dist=dist, entry_truncation=eta, df=3)
    X = draw_entries(spec)
    assert np.all(np.abs(X) <= eta * np.sqrt(300) / 0.5)
    assert abs(X.mean()) < 5 / np.sqrt(300 * 400)
    assert abs(np.mean(np.abs(X) ** 2) - 1) < 0.05


def test_tiny_truncation_falls_back_to_rademacher():
    X = draw_entries(ModelSpec(4, 5, MP, entry_truncation=0.01, seed=1))
    assert set(np.unique(X)) <= {-1.0, 1.0}


def test_budget():
    with pytest.raises(BudgetExceeded):
        sample_eigenvalues(ModelSpec(100, 100, MP), budget=9999)


def test_esd():
    s = simulator.SpectralSample(np.array([1.0, 2.0, 3.0]), np.array([0.0, 1.0, 2.0, 3.0]), None)
    F = esd(s)
    assert F(2.0) == pytest.approx(2 / 3) and F(-1) == 0 and F(np.inf) == 1
    G = esd(sample_eigenvalues(ModelSpec(100, 200, MP, seed=1)), "B_under")
    assert G(1e-300) >= 0.5


@pytest.mark.parametrize("kw", [dict(n=0, N=1), dict(n=2, N=2, entry_dist="cauchy"),
                                dict(n=2, N=2, entry_dist="heavy-tail", df=2), dict(n=2, N=2, entry_truncation=0)])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        ModelSpec(measure=MP, **kw)


def test_spec_json_round_trip():
    spec = ModelSpec(10, 20, TWO, entry_dist="standardized-heavy-tail", df=6, seed=3)
    assert spec.entry_dist == "heavy-tail"
    again = simulator.spec_from_json(spec.to_json())
    assert again == spec


def test_more_rows_than_columns_companion_drops_zeros():
    H = make_measure([(1, 2, 0.3), (0, 1, 0.7)])
    s = sample_eigenvalues(ModelSpec(30, 20, H, seed=3))
    assert s.eigs_B_under.size == 20
    assert np.all(s.eigs_B[:10] == 0) and np.array_equal(s.eigs_B[10:], s.eigs_B_under)
