import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperconv.errors import DomainError, ModelFileError
from hyperconv.expr import compile_expression
from hyperconv.model import (
    Family,
    bessel_kingman,
    bounded_demo,
    custom,
    eval_log_deriv,
    from_alias,
    index_rho,
    jacobi,
    load_model,
    naimark,
    parse_model_text,
    transmutation,
    validate_model,
)


def test_naimark_log_derivative_is_two_coth():
    x = np.array([1e-4, 1e-2, 0.5, 1.0, 2.0, 30.0])
    assert np.allclose(naimark().log_deriv(x), 2 / np.tanh(x), rtol=1e-12)


def test_jacobi_log_derivative_and_index():
    model = jacobi(1.0, 0.0)
    x = np.array([1e-4, 0.1, 1.0, 5.0])
    assert np.allclose(model.log_deriv(x), 3 / np.tanh(x) + np.tanh(x), rtol=1e-12)
    assert index_rho(model) == 2.0
    assert model.alpha0 == 3.0


@given(alpha0=st.floats(0.2, 8.0), x=st.floats(1e-5, 50.0))
def test_bessel_kingman_log_derivative(alpha0, x):
    model = bessel_kingman(alpha0)
    assert math.isclose(eval_log_deriv(model, x) * x, alpha0, rel_tol=1e-12)
    assert index_rho(model) == 0.0


@given(c=st.floats(1e-3, 1e3), x=st.floats(1e-3, 20.0))
def test_rescaling_A_keeps_log_derivative(c, x):
    model = naimark()
    assert math.isclose(model.scaled(c).log_deriv(x), model.log_deriv(x), rel_tol=1e-14)
    assert math.isclose(model.scaled(c).A(x), c * model.A(x), rel_tol=1e-12)


def test_custom_model_matches_closed_family():
    model = custom("sinh(x)^2", alpha0=2)
    x = np.array([0.01, 0.5, 1.0, 3.0])
    assert np.allclose(model.log_deriv(x), 2 / np.tanh(x), rtol=1e-6)
    assert abs(index_rho(model) - 1.0) < 1e-4


def test_custom_model_infers_alpha0():
    assert custom("x^3*cosh(x)").alpha0 == pytest.approx(3.0, abs=1e-5)


def test_naimark_transmutation():
    td = transmutation(naimark())
    x = np.array([0.1, 0.5, 1.0, 2.0])
    assert np.allclose(td.B(x), np.sinh(x) / x, rtol=1e-8)
    assert np.allclose(td.q(x), 1.0, atol=1e-8)
    assert np.allclose(td.q_inf(x), 0.0, atol=1e-8)


def test_validation_of_builtins():
    rep = validate_model(naimark())
    assert rep.passed and rep.growth_class == "exponential-normalizable"
    assert rep.A_limit == pytest.approx(0.25, rel=1e-6)
    rep = validate_model(jacobi(1.0, 0.0))
    assert rep.passed and rep.rho == 2.0
    rep = validate_model(bessel_kingman(2.0))
    assert rep.passed and rep.growth_class == "sub-exponential" and not rep.A_bounded
    rep = validate_model(bounded_demo())
    assert rep.passed and rep.A_bounded and rep.rho == 0.0


def test_validation_flags_decreasing_A():
    rep = validate_model(custom("x^2*exp(-x)", alpha0=2))
    assert not rep.passed


def test_jacobi_parameter_domain():
    with pytest.raises(DomainError):
        jacobi(0.0, 0.5)


def test_aliases():
    assert from_alias("naimark").family is Family.NAIMARK
    assert from_alias("bessel-kingman:2.5").alpha0 == 2.5
    assert from_alias("jacobi:1,0").params == (1.0, 0.0)
    assert from_alias("bounded-demo").name == "bounded-demo"
    with pytest.raises(ModelFileError):
        from_alias("nope")
    with pytest.raises(ModelFileError):
        from_alias("jacobi:x,y")


def test_model_file(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("# a custom model\nfamily = custom\na = sinh(x)^2\nalpha0 = 2\nname = sq\n")
    model = load_model(str(path))
    assert model.name == "sq"
    assert model.log_deriv(1.0) == pytest.approx(2 / math.tanh(1.0), rel=1e-6)
    with pytest.raises(ModelFileError):
        parse_model_text("family = naimark\ncolour = red\n")
    with pytest.raises(ModelFileError):
        parse_model_text("a = x\n")
    with pytest.raises(ModelFileError):
        parse_model_text("family = jacobi\nalpha = 1\n")


def test_expression_whitelist():
    f = compile_expression("2*sinh(x)^2 + exp(-x)/3 - pow(x, 2)")
    x = np.array([0.5, 1.5])
    assert np.allclose(f(x), 2 * np.sinh(x) ** 2 + np.exp(-x) / 3 - x**2)
    for bad in ("__import__('os')", "x.real", "y + 1", "open('f')", "[x]"):
        with pytest.raises(ModelFileError):
            compile_expression(bad)
