"""Independent reference computations used by the tests.

Nothing here calls the package's solver, density or support code. The
closed forms and brute-force scans are deliberately simple.
"""

import cmath
import math

import numpy as np


# --- Marchenko-Pastur ------------------------------------------------------


def mp_edges(c):
    return (1 - math.sqrt(c)) ** 2, (1 + math.sqrt(c)) ** 2


def mp_density(x, c):
    """Density of F (no atom for c <= 1)."""
    a, b = mp_edges(c)
    x = np.asarray(x, dtype=float)
    inside = (x > a) & (x < b)
    out = np.zeros_like(x)
    xi = x[inside]
    out[inside] = np.sqrt((b - xi) * (xi - a)) / (2 * math.pi * c * xi)
    return out


def mp_mu(z, c):
    """Companion transform: root of z*mu^2 + (z + 1 - c)*mu + 1 = 0 with Im(mu) > 0."""
    z = complex(z)
    bq = z + 1 - c
    disc = cmath.sqrt(bq * bq - 4 * z)
    roots = [(-bq + disc) / (2 * z), (-bq - disc) / (2 * z)]
    return max(roots, key=lambda r: r.imag)


def mp_cdf(x, c, n=200001):
    a, b = mp_edges(c)
    xs = np.linspace(a, b, n)
    f = mp_density(xs, c)
    F = np.concatenate([[0.0], np.cumsum((f[1:] + f[:-1]) / 2 * np.diff(xs))])
    return np.interp(x, xs, F / F[-1], left=0.0, right=1.0)


# --- Dozier-Silverstein -------------------------------------------------------


def ds_residual(m, z, c, s_values, sigma2):
    """Residual of the scalar equation left after eliminating g = sigma2*m."""
    s = np.asarray(s_values, dtype=float)
    q = 1 + c * sigma2 * m
    den = s / q - q * z + sigma2 * (1 - c)
    return abs(m - np.mean(1.0 / den))


# --- the (m, g) system, solved from scratch -----------------------------------


def second_system(atoms, c, z, m, g):
    s, t, w = (np.array(col, dtype=float) for col in zip(*atoms))
    den = s / (1 + c * g) - (1 + c * m * t) * z + t * (1 - c)
    return np.array([m - np.sum(w / den), g - np.sum(w * t / den)])


def solve_second(atoms, c, z, v_top=None):
    """Solve the (m, g) system at ``z`` by finite-difference Newton along a v-path.

    Starts far up the imaginary direction with m ~ -1/z, g ~ -E[t]/z and
    walks down to ``Im z`` in small geometric steps.
    """
    z = complex(z)
    t_mean = sum(w * t for _, t, w in atoms)
    top = v_top or max(10.0, 10 * abs(z))
    vs = np.geomspace(top, z.imag, 120)
    zz = complex(z.real, vs[0])
    x = np.array([-1 / zz, -t_mean / zz])
    for v in vs:
        zz = complex(z.real, v)
        for _ in range(60):
            F = second_system(atoms, c, zz, *x)
            J = np.empty((2, 2), dtype=complex)
            h = 1e-7 * max(1.0, abs(x).max())
            for k in range(2):
                e = np.zeros(2, dtype=complex)
                e[k] = h
                J[:, k] = (second_system(atoms, c, zz, *(x + e)) - second_system(atoms, c, zz, *(x - e))) / (2 * h)
            step = np.linalg.solve(J, F)
            x = x - step
            if abs(step).max() < 1e-14 * max(1.0, abs(x).max()):
                break
    return complex(x[0]), complex(x[1])


# --- distances by brute force -------------------------------------------------


def kolmogorov_brute(F, G, xs):
    """Max of |F - G| over xs with both one-sided limits (xs must contain all jumps)."""
    xs = np.asarray(xs, dtype=float)
    eps = 1e-12 * max(1.0, abs(xs).max())
    vals = [abs(F(x) - G(x)) for x in xs] + [abs(F(x - eps) - G(x - eps)) for x in xs]
    return max(vals)


def levy_brute(F, G, lo, hi, n_x=4001, deltas=None):
    """Smallest delta on a grid for which the defining inequalities hold on a dense x-grid."""
    xs = np.linspace(lo, hi, n_x)
    if deltas is None:
        deltas = np.linspace(0, 1, 2001)
    Fx = F(xs)
    for d in deltas:
        if np.all(G(xs - d) - d <= Fx + 1e-12) and np.all(Fx <= G(xs + d) + d + 1e-12):
            return float(d)
    return 1.0
