import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hyperconv.errors import InvertibilityError, WindowError
from hyperconv.measure import (
    GridMeasure,
    combine,
    convolve_R,
    exp_weight,
    fourier_stieltjes,
    neumann_inverse,
    pair,
    smooth_weights,
    trapezoid_weights,
    tv_distance,
)

STEP = 1e-3


def uniform(a, b, step=STEP):
    return GridMeasure.from_cdf(lambda t: (np.clip(t, a, b) - a) / (b - a), a, b, step)


densities = arrays(np.float64, st.integers(2, 60), elements=st.floats(-5, 5, allow_nan=False))


def test_trapezoid_weights():
    assert trapezoid_weights(0, 0.1).size == 0
    assert trapezoid_weights(1, 0.1)[0] == 0.0
    w = trapezoid_weights(11, 0.1)
    assert w.sum() == pytest.approx(1.0)
    assert w[0] == w[-1] == pytest.approx(0.05)


def test_atoms_convolve_to_atom():
    out = convolve_R(GridMeasure.atom(1.0), GridMeasure.atom(2.0))
    assert out.atoms == ((3.0, 1.0),)
    assert out.mass() == 1.0


def test_uniform_self_convolution_is_triangle():
    u = uniform(0.0, 1.0)
    tri = convolve_R(u, u)
    assert tri.mass() == pytest.approx(1.0, abs=1e-12)
    assert tri.density_at(1.0) == pytest.approx(1.0, abs=2e-3)
    assert tri.density_at(0.5) == pytest.approx(0.5, abs=2e-3)
    assert tri.support()[0] >= -STEP and tri.support()[1] <= 2 + STEP


def test_shifted_uniform_distance():
    y = 50.0
    u = uniform(-y, y, 1e-2)
    assert tv_distance(u.shift(1.0), u) == pytest.approx(1 / y, rel=1e-9)


@pytest.mark.parametrize("lam", [0.3, 1.0, 2.5])
def test_fourier_stieltjes_of_uniform(lam):
    u = uniform(-1.0, 1.0)
    assert fourier_stieltjes(u, lam) == pytest.approx(math.sin(lam) / lam, abs=1e-6)


def test_fourier_stieltjes_array_and_atoms():
    mu = GridMeasure(atoms=((1.0, 0.5), (-1.0, 0.5)))
    lams = np.array([0.0, 1.0, 2.0])
    assert np.allclose(fourier_stieltjes(mu, lams), np.cos(lams))


def test_exp_weight_makes_exponential_uniform():
    y = 1.0
    nu = GridMeasure.from_cdf(lambda t: (np.exp(np.clip(t, -y, y)) - math.exp(-y)) / (2 * math.sinh(y)), -y, y, STEP)
    tau = exp_weight(nu, 1.0)
    assert np.allclose(tau.density[1:-1], 1 / (2 * math.sinh(1.0)), rtol=1e-6)


def test_neumann_inverse_of_atom_series():
    u = GridMeasure.atom(-1.0, 1.0, step=0.5)
    target = GridMeasure.atom(0.0, 1.0, step=0.5)
    out = neumann_inverse(u, target, tol=1e-12)
    assert out.mass() == pytest.approx(2.0, abs=1e-11)
    masses = dict(out.atoms)
    for k in range(5):
        assert masses[-float(k)] == pytest.approx(2.0**-k)


def test_neumann_inverse_exponential():
    # u = 2 e^{2t} on t <= 0 has mass 1; (delta - u/2)^{-1} doubles the mass
    L = 12.0
    u = GridMeasure.from_cdf(lambda t: np.exp(2 * np.asarray(t)), -L, 0.0, 1e-2)
    out = neumann_inverse(u, GridMeasure.atom(0.0, 1.0, step=1e-2), tol=1e-10)
    assert out.mass() == pytest.approx(2.0, abs=1e-8)


def test_neumann_inverse_rejects_large_kernel():
    with pytest.raises(InvertibilityError):
        neumann_inverse(GridMeasure.atom(-1.0, 2.0), GridMeasure.atom(0.0))


def test_convolution_window_limit():
    u = uniform(0.0, 1.0)
    with pytest.raises(WindowError):
        convolve_R(u, u, max_points=100)


def test_deposit_and_resample_keep_mass():
    u = uniform(0.0, 1.0)
    assert u.deposit(-0.01, 0.0037).mass() == pytest.approx(1.0, abs=1e-13)
    assert u.resample(0.01).mass() == pytest.approx(1.0, abs=1e-13)
    assert u.resample(5e-4).mass() == pytest.approx(1.0, abs=1e-12)


def test_to_density_spreads_atoms():
    mu = GridMeasure(atoms=((0.25, 1.0),), origin=0.0, step=0.1, density=np.zeros(5))
    d = mu.to_density()
    assert not d.atoms
    assert d.mass() == pytest.approx(1.0)
    assert pair(d, lambda t: t) == pytest.approx(0.25)


@given(densities, st.floats(-3, 3), st.floats(1e-3, 1.0))
def test_csv_round_trip_is_exact(dens, origin, step):
    mu = GridMeasure(atoms=((origin - 1, 0.3),), origin=origin, step=step, density=dens)
    back = GridMeasure.from_csv(mu.to_csv())
    assert back.origin == mu.origin and back.step == mu.step
    assert np.array_equal(back.density, mu.density)
    assert back.atoms == mu.atoms


@given(densities, densities)
def test_convolution_mass_is_multiplicative(a, b):
    mu = GridMeasure(origin=0.0, step=0.1, density=a)
    nu = GridMeasure(origin=-1.0, step=0.1, density=b, atoms=((2.0, 0.5),))
    out = convolve_R(mu, nu)
    assert out.mass() == pytest.approx(mu.mass() * nu.mass(), abs=1e-9 * (1 + mu.tv_norm() * nu.tv_norm()))
    assert out.tv_norm() <= mu.tv_norm() * nu.tv_norm() * (1 + 1e-12) + 1e-12


@given(densities, densities, densities)
def test_tv_triangle_inequality(a, b, c):
    ms = [GridMeasure(origin=0.1 * k, step=0.1, density=d) for k, d in enumerate((a, b, c))]
    assert tv_distance(ms[0], ms[2]) <= tv_distance(ms[0], ms[1]) + tv_distance(ms[1], ms[2]) + 1e-9


@given(arrays(np.float64, st.integers(3, 80), elements=st.floats(0, 10)))
def test_smoothing_keeps_sum_and_sign(W):
    S = smooth_weights(W)
    assert S.sum() == pytest.approx(W.sum(), abs=1e-9)
    assert np.all(S >= 0)
    assert len(S) == len(W)


def test_combine_aligns_shared_lattice():
    a = GridMeasure(origin=0.0, step=0.5, density=np.ones(3))
    b = GridMeasure(origin=1.0, step=0.5, density=np.ones(3))
    s = combine([a, b])
    assert s.origin == 0.0 and s.n == 5
    assert s.mass() == pytest.approx(a.mass() + b.mass())
