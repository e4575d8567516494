import math

import numpy as np
import pytest

import oracles
from specden import density
from specden.errors import GridTooNarrow
from specden.measure import make_measure, marchenko_pastur

MP = marchenko_pastur()
TWO = make_measure([(1, 2, 0.5), (0, 1, 0.5)])


def test_density_at_examples():
    fu, f = density.density_at(MP, 1.0, 2.0)
    assert abs(fu - 1 / (2 * math.pi)) < 1e-9
    fu, f = density.density_at(MP, 0.25, 1.0)
    assert abs(f - math.sqrt(1.25 * 0.75) / (2 * math.pi * 0.25)) < 1e-9
    assert abs(fu - 0.25 * f) < 1e-15
    assert density.density_at(MP, 0.25, 3.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        density.density_at(MP, 0.25, 0.0)


def test_grid_matches_closed_form_c1():
    g = density.density_grid(MP, 1.0, 0.01, 4.2, 512)
    keep = (g.xs > 0.05) & (np.abs(g.xs - 4) > 0.05)
    assert np.max(np.abs(g.f[keep] - oracles.mp_density(g.xs[keep], 1.0))) < 1e-6
    assert np.array_equal(g.f_under, g.f * 1.0)


def test_grid_preconditions():
    with pytest.raises(ValueError):
        density.density_grid(MP, 0.5, 1.0, 1.0, 10)
    with pytest.raises(ValueError):
        density.density_grid(MP, 0.5, 1.0, 2.0, 1)
    with pytest.raises(ValueError):
        density.density_grid(MP, 0.5, 0.0, 2.0, 10)


def test_two_atom_grid_nonnegative_and_continuous():
    g = density.density_grid(TWO, 0.5, 0.01, 8.0, 800)
    assert np.all(g.f >= 0) and not g.failed.any()
    fine = density.density_grid(TWO, 0.5, 0.01, 8.0, 1600)
    jump = np.max(np.abs(np.diff(g.f)))
    jump_fine = np.max(np.abs(np.diff(fine.f)))
    assert jump_fine < jump
    assert np.allclose(g.f_under, 0.5 * g.f, rtol=0, atol=0)


def test_warm_start_matches_independent():
    a = density.density_grid(TWO, 0.5, 0.05, 7.0, 120, warm_start=True)
    b = density.density_grid(TWO, 0.5, 0.05, 7.0, 120)
    assert np.max(np.abs(a.f - b.f)) < 1e-9


@pytest.mark.parametrize("c, tol", [(0.25, 1e-4), (1.0, 1e-3)])
def test_mass_and_atom(c, tol):
    a, b = oracles.mp_edges(c)
    xs = density.support_grid([(a, b)], 2000)
    g = density.density_on(MP, c, xs)
    F, mass, atom = density.cdf_and_mass(MP, c, g)
    assert abs(mass - 1) < tol
    assert abs(atom) < 1e-4
    assert np.all(np.diff(F) >= 0)


def test_grid_too_narrow():
    g = density.density_grid(MP, 0.25, 0.5, 1.5, 50)
    with pytest.raises(GridTooNarrow):
        density.cdf_and_mass(MP, 0.25, g)


def test_richardson_recovers_limit():
    e = [0.3 + 2.0 * v ** 0.5 for v in (1e-3, 1e-4, 1e-5)]
    assert abs(density._richardson(*e) - 0.3) < 1e-12
