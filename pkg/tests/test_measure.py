import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from specden import errors
from specden.measure import (
    dozier_silverstein,
    from_json,
    load,
    make_measure,
    marchenko_pastur,
    report,
    to_tilted,
    truncate,
)

atom = st.tuples(
    st.floats(0, 10, allow_nan=False),
    st.floats(0, 10, allow_nan=False),
    st.floats(0.01, 1, allow_nan=False),
)


def normalised(atoms):
    tot = math.fsum(a[2] for a in atoms)
    return [(s, t, w / tot) for s, t, w in atoms]


def test_valid_measures():
    H = make_measure([(0, 1, 1)])
    assert len(H) == 1 and H.atoms == [(0.0, 1.0, 1.0)]
    H2 = make_measure([(1, 2, 0.5), (2, 1, 0.5)])
    assert len(H2) == 2


def test_weight_sum_mismatch():
    with pytest.raises(errors.WeightSumMismatch):
        make_measure([(1, 1, 0.7)])


def test_renormalises_within_tolerance():
    H = make_measure([(1, 1, 0.5 + 4e-10), (0, 1, 0.5)])
    assert math.isclose(H.w.sum(), 1.0, abs_tol=1e-15)


@pytest.mark.parametrize(
    "atoms, exc",
    [
        ([], errors.EmptyMeasure),
        ([(-1, 1, 1)], errors.NegativeValue),
        ([(1, -1, 1)], errors.NegativeValue),
        ([(1, 1, 0)], errors.NegativeValue),
        ([(float("nan"), 1, 1)], errors.NegativeValue),
    ],
)
def test_rejects_bad_atoms(atoms, exc):
    with pytest.raises(exc):
        make_measure(atoms)


def test_measure_is_immutable():
    H = marchenko_pastur()
    with pytest.raises(ValueError):
        H.s[0] = 3.0


def test_report_examples():
    r = report(make_measure([(0, 1, 1)]), 0.5)
    assert (r.lambda_minus1, r.lambda_plus1, r.rsn_integral, r.rsn_ok) == (1.0, 1.0, 0.0, True)
    r = report(make_measure([(0, 4, 0.5), (0, 1, 0.5)]), 0.5)
    assert math.isclose(r.lambda_plus1, math.sqrt(2.5), rel_tol=1e-15)
    r = report(make_measure([(1, 2, 0.5), (2, 1, 0.5)]), 0.5)
    assert math.isclose(r.rsn_integral, 1.25) and r.rsn_ok


def test_report_zero_noise_atom():
    r = report(make_measure([(0, 0, 0.5), (1, 1, 0.5)]), 0.5)
    assert math.isinf(r.lambda_minus1) and math.isinf(r.rsn_integral) and not r.rsn_ok


def test_to_tilted():
    assert to_tilted(make_measure([(2, 4, 1)])).atoms == [(0.5, 4.0, 1.0)]
    assert to_tilted(marchenko_pastur()).atoms == [(0.0, 1.0, 1.0)]
    with pytest.raises(errors.ZeroNoiseAtom):
        to_tilted(make_measure([(1, 0, 1)]))


def test_truncate_examples():
    assert truncate(make_measure([(5, 0.1, 1)]), 2, 0.5).atoms == [(2.0, 0.5, 1.0)]
    assert truncate(make_measure([(1, 1, 1)]), 2, 0.5).atoms == [(1.0, 1.0, 1.0)]
    out = truncate(make_measure([(3, 3, 0.4), (0, 0, 0.6)]), 2, 0.5)
    assert out.atoms == [(2.0, 2.0, 0.4), (0.0, 0.5, 0.6)]
    for tau, eps in [(1, 1), (1, 2), (1, 0)]:
        with pytest.raises(errors.BadBounds):
            truncate(marchenko_pastur(), tau, eps)


@given(st.lists(atom, min_size=1, max_size=6), st.floats(0.5, 5), st.floats(0.01, 0.49))
def test_truncate_idempotent(atoms, tau, eps):
    H = make_measure(normalised(atoms))
    once = truncate(H, tau, eps)
    assert truncate(once, tau, eps).atoms == once.atoms


@given(st.lists(atom, min_size=1, max_size=6))
def test_tilted_preserves_t_marginal(atoms):
    atoms = [(s, t + 0.1, w) for s, t, w in normalised(atoms)]
    H = make_measure(atoms)
    T = to_tilted(H)
    assert np.array_equal(T.t, H.t) and np.array_equal(T.w, H.w)


@given(st.lists(atom, min_size=1, max_size=6), st.randoms(use_true_random=False))
def test_report_invariant_under_reordering_and_merging(atoms, rnd):
    atoms = [(s, t + 0.1, w) for s, t, w in normalised(atoms)]
    shuffled = list(atoms)
    rnd.shuffle(shuffled)
    s, t, w = atoms[0]
    split = [(s, t, w / 2), (s, t, w / 2)] + atoms[1:]
    base = report(make_measure(atoms), 0.5)
    for other in (shuffled, split):
        r = report(make_measure(other), 0.5)
        assert math.isclose(r.lambda_plus1, base.lambda_plus1, rel_tol=1e-12)
        assert math.isclose(r.lambda_minus1, base.lambda_minus1, rel_tol=1e-12)


def test_json_round_trip(tmp_path):
    H = dozier_silverstein([1, 2, 3], 0.5)
    p = tmp_path / "h.json"
    p.write_text(json.dumps(H.to_json()))
    assert load(p).atoms == H.atoms
    assert from_json({"atoms": [{"s": 0, "t": 1, "w": 1}]}).atoms == marchenko_pastur().atoms
