"""Backend equivalence and contracts of the hot kernels."""

import numpy as np
import pytest

from bohmsim.kernels import available_backends, reference

BACKENDS = available_backends()


def _random_field(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


@pytest.mark.parametrize("periodic", [True, False])
def test_interp_1d_backends_agree(periodic):
    rng = np.random.default_rng(3)
    n, lo, h = 64, -2.0, 0.125
    vals = _random_field(rng, n)
    hi = lo + (n if periodic else n - 1) * h
    xq = rng.uniform(lo, hi, size=500)
    results = [impl.interp_cubic_1d(vals, lo, h, periodic, xq)
               for impl in BACKENDS.values()]
    for r in results[1:]:
        np.testing.assert_allclose(r, results[0], rtol=0, atol=1e-12)


@pytest.mark.parametrize("per", [(True, True), (False, False), (True, False)])
def test_interp_2d_backends_agree(per):
    rng = np.random.default_rng(5)
    n0, n1 = 32, 48
    vals = _random_field(rng, (n0, n1))
    lo0, h0, lo1, h1 = -1.0, 0.1, 0.0, 0.05
    hi0 = lo0 + (n0 if per[0] else n0 - 1) * h0
    hi1 = lo1 + (n1 if per[1] else n1 - 1) * h1
    xq = rng.uniform(lo0, hi0, 400)
    yq = rng.uniform(lo1, hi1, 400)
    results = [impl.interp_cubic_2d(vals, lo0, h0, per[0], lo1, h1, per[1],
                                    xq, yq)
               for impl in BACKENDS.values()]
    for r in results[1:]:
        np.testing.assert_allclose(r, results[0], rtol=0, atol=1e-12)


@pytest.mark.parametrize("impl_name", sorted(BACKENDS))
@pytest.mark.parametrize("periodic", [True, False])
def test_interp_exact_at_grid_points(impl_name, periodic):
    impl = BACKENDS[impl_name]
    rng = np.random.default_rng(7)
    n, lo, h = 40, 0.5, 0.25
    vals = _random_field(rng, n)
    pts = lo + h * np.arange(n, dtype=np.float64)
    out = impl.interp_cubic_1d(vals, lo, h, periodic, pts)
    np.testing.assert_array_equal(out, vals)


@pytest.mark.parametrize("impl_name", sorted(BACKENDS))
def test_interp_smooth_wave_midpoints(impl_name):
    impl = BACKENDS[impl_name]
    n, lo = 2048, -np.pi * 8
    h = (np.pi * 16) / n
    k = 2.0  # well below the lattice Nyquist pi/h ~ 40
    x = lo + h * np.arange(n)
    vals = np.exp(1j * k * x)
    mid = x[:-1] + 0.5 * h
    out = impl.interp_cubic_1d(vals, lo, h, True, mid)
    assert np.max(np.abs(out - np.exp(1j * k * mid))) < 1e-6


@pytest.mark.parametrize("impl_name", sorted(BACKENDS))
def test_thomas_matches_dense_solve(impl_name):
    impl = BACKENDS[impl_name]
    rng = np.random.default_rng(11)
    b, n = 6, 37
    dl = _random_field(rng, (b, n)) * 0.2
    du = _random_field(rng, (b, n)) * 0.2
    d = _random_field(rng, (b, n)) + 3.0  # diagonally dominant
    rhs = _random_field(rng, (b, n))
    x = impl.thomas_solve(dl, d, du, rhs)
    for r in range(b):
        full = np.diag(d[r]) + np.diag(dl[r, 1:], -1) + np.diag(du[r, :-1], 1)
        np.testing.assert_allclose(x[r], np.linalg.solve(full, rhs[r]),
                                   rtol=0, atol=1e-10)


def test_thomas_backends_agree():
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(13)
    b, n = 4, 129
    dl = _random_field(rng, (b, n)) * 0.3
    du = _random_field(rng, (b, n)) * 0.3
    d = _random_field(rng, (b, n)) + 4.0
    rhs = _random_field(rng, (b, n))
    outs = [impl.thomas_solve(dl, d, du, rhs) for impl in BACKENDS.values()]
    np.testing.assert_allclose(outs[0], outs[-1], rtol=0, atol=1e-11)


def test_reference_weights_partition_of_unity():
    u = np.linspace(0.0, 3.0, 301)
    w = reference._lagrange4(u)
    np.testing.assert_allclose(w.sum(axis=0), 1.0, atol=1e-12)
