import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma, hyp2f1, jv

from hyperconv.errors import DomainError, ResolutionError, StabilityError, WindowError
from hyperconv.kernel import (
    HyperbolicGrid,
    convolve_H,
    kernel_cells,
    kernel_density,
    liouville_applicable,
    translate_function,
)
from hyperconv.measure import GridMeasure, pair, tv_distance
from hyperconv.model import bessel_kingman, bounded_demo, custom, jacobi, naimark


def naimark_pdf(x, y, t):
    return np.sinh(t) / (2 * math.sinh(x) * math.sinh(y))


def bessel_j(alpha0, lam, t):
    a = (alpha0 - 1) / 2
    z = lam * np.asarray(t, dtype=float)
    return gamma(a + 1) * (2 / z) ** a * jv(a, z)


def jacobi_phi(alpha, beta, mu, t):
    rho = alpha + beta + 1
    return hyp2f1((rho - mu) / 2, (rho + mu) / 2, alpha + 1, -np.sinh(np.asarray(t, dtype=float)) ** 2)


def test_naimark_closed_form_kernel():
    k = kernel_density(naimark(), 1.0, 2.0)
    assert k.mass() == pytest.approx(1.0, abs=1e-12)
    assert k(2.0) == pytest.approx(1 / (2 * math.sinh(1.0)), abs=1e-12)
    t = np.linspace(1.0, 3.0, 9)
    assert np.allclose(k(t), naimark_pdf(1.0, 2.0, t), rtol=1e-12)
    assert k(0.5) == 0.0 and k(3.5) == 0.0


@pytest.mark.parametrize("scheme", ["liouville", "weighted"])
def test_marched_naimark_kernel_converges(scheme):
    errs = []
    for h in (4e-3, 2e-3):
        m = kernel_density(naimark(), 1.0, 2.0, h=h, method="marched", scheme=scheme)
        c = kernel_density(naimark(), 1.0, 2.0, h=h, method="closed-form")
        errs.append(tv_distance(m.measure, c.measure))
    order = math.log2(errs[0] / errs[1])
    assert errs[1] < 5e-3
    assert order > (1.9 if scheme == "liouville" else 0.9)


def test_transmutation_route_agrees():
    m = kernel_density(naimark(), 1.0, 2.0, h=2e-3, method="transmutation")
    c = kernel_density(naimark(), 1.0, 2.0, h=2e-3, method="closed-form")
    assert tv_distance(m.measure, c.measure) < 5e-3


def test_richardson_estimate_is_reported():
    k = kernel_density(jacobi(1.0, 0.0), 1.0, 1.5, h=4e-3, richardson=True)
    assert 0 < k.richardson < 1e-2


@pytest.mark.parametrize("alpha0", [1.0, 3.0, 5.0])
@pytest.mark.parametrize("lam", [0.7, 2.0])
def test_bessel_kingman_product_formula(alpha0, lam):
    x, y = 1.0, 1.7
    k = kernel_density(bessel_kingman(alpha0), x, y, h=2e-3)
    lhs = pair(k.measure, lambda t: bessel_j(alpha0, lam, t))
    assert lhs == pytest.approx(bessel_j(alpha0, lam, x) * bessel_j(alpha0, lam, y), abs=2e-3)


@pytest.mark.parametrize("mu", [0.0, 1.0])
def test_jacobi_product_formula(mu):
    x, y = 0.8, 1.5
    k = kernel_density(jacobi(1.0, 0.0), x, y, h=2e-3)
    lhs = pair(k.measure, lambda t: jacobi_phi(1.0, 0.0, mu, t))
    assert lhs == pytest.approx(jacobi_phi(1.0, 0.0, mu, x) * jacobi_phi(1.0, 0.0, mu, y), rel=2e-3)


def test_kernel_is_symmetric_in_x_and_y():
    a = kernel_density(bessel_kingman(3.0), 0.7, 1.4, h=7e-3)
    b = kernel_density(bessel_kingman(3.0), 1.4, 0.7, h=7e-3)
    assert np.array_equal(a.density, b.density)


def test_liouville_scheme_selection():
    assert liouville_applicable(naimark())
    assert liouville_applicable(jacobi(0.5, 0.0))
    assert not liouville_applicable(jacobi(1.0, 0.0))
    assert not liouville_applicable(bounded_demo())
    with pytest.raises(DomainError):
        kernel_density(bounded_demo(), 1.0, 1.0, method="marched", scheme="liouville")


@given(
    alpha0=st.floats(0.5, 6.0),
    x=st.floats(0.05, 3.0),
    y=st.floats(0.05, 3.0),
)
def test_marched_kernel_is_a_probability_on_its_support(alpha0, x, y):
    k = kernel_density(bessel_kingman(alpha0), x, y, h=1e-2)
    assert k.mass() == pytest.approx(1.0, abs=1e-10)
    # leapfrog undershoot near t = |x - y| is O(h^3) relative to the peak
    assert k.density.min() >= -1e-6 * k.density.max()
    lo, hi = k.measure.support()
    assert lo >= abs(x - y) - k.h * (1 + 1e-9)
    assert hi <= x + y + k.h * (1 + 1e-9)


def test_kernel_resolution_error():
    with pytest.raises(ResolutionError):
        kernel_density(naimark(), 1e-4, 1.0, h=1e-3)


def test_kernel_csv_header():
    assert kernel_density(naimark(), 1.0, 1.0, h=0.25).to_csv().startswith("t,k\n")


def test_grid_contract():
    with pytest.raises(StabilityError):
        HyperbolicGrid(2.0, h_x=1e-3, h_y=2e-3)
    with pytest.raises(DomainError):
        HyperbolicGrid(2.0, h_x=1e-3, h_y=5e-4)


@pytest.mark.parametrize("scheme", ["liouville", "weighted"])
def test_translation_of_eigenfunction(scheme):
    lam, y = 1.3, 0.7

    def phi(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            v = np.sin(lam * t) / (lam * np.sinh(t))
        return np.where(t == 0, 1.0, v)

    T = translate_function(naimark(), phi, y, HyperbolicGrid(4.0, 1e-3), scheme=scheme)
    assert np.allclose(T.values, phi(T.x) * phi(y), atol=2e-4)


def test_translation_of_constant_and_exponential():
    grid = HyperbolicGrid(3.0, 1e-3)
    T = translate_function(naimark(), np.ones_like, 1.0, grid)
    assert np.abs(T.values - 1).max() < 1e-10
    T = translate_function(naimark(), lambda t: np.exp(-t), 1.0, grid)
    k = kernel_density(naimark(), 1.0, 1.0)
    assert T(1.0) == pytest.approx(pair(k.measure, lambda t: np.exp(-t)), abs=1e-6)
    assert T.sup_u <= T.sup_f * (1 + 1e-9)


def test_translation_window_error():
    with pytest.raises(WindowError):
        translate_function(naimark(), np.ones_like, 2.0, HyperbolicGrid(1.0, 1e-2))


def test_hypergroup_convolution_of_points():
    model = naimark()
    out = convolve_H(model, GridMeasure.atom(1.0, step=1e-3), GridMeasure.atom(2.0, step=1e-3))
    k = kernel_density(model, 1.0, 2.0)
    assert out.mass() == pytest.approx(1.0, abs=1e-12)
    assert tv_distance(out, k.measure) < 1e-9


def test_hypergroup_identity_and_mass():
    model = bessel_kingman(2.0)
    v = GridMeasure.from_density(lambda t: np.full_like(t, 0.5), 0.0, 2.0, 0.05)
    same = convolve_H(model, GridMeasure.atom(0.0, step=0.05), v, h=0.05)
    assert tv_distance(same, v) < 1e-12
    out = convolve_H(model, GridMeasure.atom(0.5, step=0.05), v, h=0.05)
    assert out.mass() == pytest.approx(v.mass(), abs=1e-12)


def test_kernel_cells_alignment():
    j0, cells = kernel_cells(naimark(), 1.0, 2.0, 0.0, 0.01)
    assert j0 == 100
    assert cells.sum() == pytest.approx(1.0, abs=1e-12)


@given(
    x=st.sampled_from([0.5, 1.0, 1.5]),
    y=st.sampled_from([0.25, 0.75, 2.0]),
    p=st.floats(0.1, 0.9),
)
def test_hypergroup_convolution_commutes(x, y, p):
    model = bessel_kingman(3.0)
    mu = GridMeasure(atoms=((x, p), (x + 0.5, 1 - p)), origin=0.0, step=0.05)
    nu = GridMeasure.atom(y, step=0.05)
    ab = convolve_H(model, mu, nu, h=0.05)
    ba = convolve_H(model, nu, mu, h=0.05)
    assert tv_distance(ab, ba) < 1e-6
    assert ab.mass() == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("method", ["closed-form", "marched"])
def test_kernel_is_norm_continuous(method):
    h = 1e-3
    a = kernel_density(naimark(), 1.0, 2.0, h=h, method=method).measure
    b = kernel_density(naimark(), 1.0 + 1e-3, 2.0, h=h, method=method).measure
    grid_step = min(a.step, b.step)
    assert tv_distance(a.resample(grid_step, 0.0), b.resample(grid_step, 0.0)) < 5e-3


@pytest.mark.parametrize("alpha0", [2.0, 3.0])
def test_kernel_sup_times_min_is_bounded(alpha0):
    model = bessel_kingman(alpha0)
    pts = [0.5, 1.0, 2.0, 3.0]
    vals = [kernel_density(model, x, y, h=1e-2).density.max() * min(x, y) for x in pts for y in pts]
    assert max(vals) < 2.0


def test_kernel_is_scale_invariant():
    base = custom("x**2 * (1 + x**2)", alpha0=2.0)
    scaled = custom("7.5 * x**2 * (1 + x**2)", alpha0=2.0)
    a = kernel_density(base, 1.0, 1.5, h=1e-2).measure
    b = kernel_density(scaled, 1.0, 1.5, h=1e-2).measure
    # only A'/A enters; the residue is the finite-difference derivative of A
    assert tv_distance(a, b) < 1e-7


def test_translation_tends_to_identity_away_from_jumps():
    def box(t):
        t = np.asarray(t, dtype=float)
        return ((t >= 1.0) & (t <= 2.0)).astype(float)

    out = translate_function(naimark(), box, 1e-2, HyperbolicGrid(4.0, 1e-3))
    xs = out.x
    far = (xs >= 0.1) & (xs <= 3.0) & (np.abs(xs - 1.0) >= 0.1) & (np.abs(xs - 2.0) >= 0.1)
    assert np.abs(out.values[far] - box(xs[far])).max() < 1e-2
