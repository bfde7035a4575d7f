"""Eigenfunctions phi_lambda of L f = -f'' - (A'/A) f' and the c-function.

phi_lambda solves phi'' + (A'/A) phi' + (lambda^2 + rho^2) phi = 0 with
phi(0) = 1, phi'(0) = 0.  The integration runs on psi = e^{rho x} phi, which
satisfies

    psi'' + beta_inf psi' + (lambda^2 - rho beta_inf) psi = 0,

so psi stays of unit size for real lambda and the large-x fit
psi ~ c(lambda) e^{i lambda x} + c(-lambda) e^{-i lambda x} is well scaled.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConditioningError, DomainError, NonAsymptoticError, RangeError, RegimeError
from .model import Family, SturmLiouvilleModel, eval_log_deriv, index_rho

X_START = 1e-2
RTOL = 1e-11
ATOL = 1e-13
_EXP_LIMIT = 700.0


@dataclass(frozen=True, eq=False)
class EigenSolution:
    lam: complex
    x_max: float
    grid_step: float
    x: np.ndarray
    phi: np.ndarray
    phi_prime: np.ndarray

    def __call__(self, t):
        """Linear interpolation of phi (real and imaginary parts)."""
        t = np.asarray(t, dtype=float)
        return np.interp(t, self.x, self.phi.real) + 1j * np.interp(t, self.x, self.phi.imag)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,re_phi,im_phi\n")
        for xv, p in zip(self.x, self.phi):
            buf.write(f"{xv:.17g},{p.real:.17g},{p.imag:.17g}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class CEstimate:
    lam: complex
    c_plus: complex
    c_minus: complex
    residual: float
    x_fit: tuple = ()


def frobenius_coefficients(model: SturmLiouvilleModel, lam: complex, eps: float = X_START):
    """(c2, c4) of phi = 1 + c2 x^2 + c4 x^4 near 0."""
    a0 = model.alpha0
    mu = complex(lam) ** 2 + index_rho(model) ** 2
    beta1 = float(model.beta(np.array([eps]))[0]) / eps
    c2 = -mu / (2 * (1 + a0))
    c4 = -c2 * (mu + 2 * beta1) / (4 * (3 + a0))
    return c2, c4


def _integrate_psi(model, lam, x_eval, x_start, rtol=RTOL, atol=ATOL):
    """psi and psi' at the (sorted, >= x_start) points ``x_eval``."""
    lam = complex(lam)
    rho = index_rho(model)
    c2, c4 = frobenius_coefficients(model, lam, x_start)
    xs = x_start
    phi0 = 1 + c2 * xs**2 + c4 * xs**4
    dphi0 = 2 * c2 * xs + 4 * c4 * xs**3
    e = math.exp(rho * xs)
    y0 = np.array([e * phi0, e * (dphi0 + rho * phi0)], dtype=complex)
    lam2 = lam * lam

    def rhs(x, y):
        b = eval_log_deriv(model, x) - 2 * rho
        return np.array([y[1], -b * y[1] - (lam2 - rho * b) * y[0]])

    x_end = float(x_eval[-1])
    if x_end <= xs:
        return np.tile(y0[:, None], (1, len(x_eval)))
    sol = solve_ivp(rhs, (xs, x_end), y0, method="DOP853", t_eval=x_eval, rtol=rtol, atol=atol)
    if not sol.success:
        raise RangeError(f"eigenfunction integration failed: {sol.message}")
    return sol.y


def phi_lambda(
    model: SturmLiouvilleModel,
    lam: complex,
    x_max: float,
    h: float = 1e-2,
    x_start: float = X_START,
) -> EigenSolution:
    """Sample phi_lambda and phi_lambda' on ``[0, x_max]`` with step ``h``.

    Parameters
    ----------
    model : SturmLiouvilleModel
    lam : complex
        Spectral parameter; the eigenvalue of L is ``lam**2 + rho**2``.
    x_max, h : float
        Window and output spacing.  The solver is adaptive; ``h`` only sets
        where values are reported.
    x_start : float
        Below this point the Frobenius series ``1 + c2 x^2 + c4 x^4`` is used.

    Raises
    ------
    RangeError
        If ``|Im lam| * x_max`` would overflow double precision.
    """
    if not (x_max > 0 and h > 0):
        raise DomainError("x_max and h must be positive")
    lam = complex(lam)
    rho = index_rho(model)
    if (abs(lam.imag) + rho) * x_max > _EXP_LIMIT:
        raise RangeError(f"|Im lambda| x_max = {abs(lam.imag) * x_max:.3g} overflows double precision")
    n = int(round(x_max / h))
    x = np.linspace(0.0, n * h, n + 1)
    c2, c4 = frobenius_coefficients(model, lam, x_start)
    phi = np.empty(len(x), dtype=complex)
    dphi = np.empty(len(x), dtype=complex)
    near = x <= x_start
    phi[near] = 1 + c2 * x[near] ** 2 + c4 * x[near] ** 4
    dphi[near] = 2 * c2 * x[near] + 4 * c4 * x[near] ** 3
    far = ~near
    if np.any(far):
        psi, dpsi = _integrate_psi(model, lam, x[far], x_start)
        damp = np.exp(-rho * x[far])
        phi[far] = damp * psi
        dphi[far] = damp * (dpsi - rho * psi)
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(dphi))):
        raise RangeError("eigenfunction overflowed")
    if lam.imag == 0:
        phi = phi.real.astype(complex)
        dphi = dphi.real.astype(complex)
    return EigenSolution(lam=lam, x_max=float(x[-1]), grid_step=h, x=x, phi=phi, phi_prime=dphi)


def phi_at(model: SturmLiouvilleModel, lam: complex, x: float) -> complex:
    """phi_lambda(x) at a single point."""
    lam = complex(lam)
    if x <= X_START:
        c2, c4 = frobenius_coefficients(model, lam)
        return complex(1 + c2 * x**2 + c4 * x**4)
    psi = _integrate_psi(model, lam, np.array([float(x)]), X_START)[0, 0]
    return complex(psi * math.exp(-index_rho(model) * x))


def c_function(
    model: SturmLiouvilleModel,
    lam: complex,
    x_fit: tuple[float, float] | None = None,
    x_check: float = 35.0,
    tol: float = 1e-4,
    min_sin: float = 0.05,
) -> CEstimate:
    """Fit e^{rho x} phi_lambda = c(lam) e^{i lam x} + c(-lam) e^{-i lam x}.

    The 2x2 system is solved at ``x_fit`` (default ``(30, 30 + pi/(4|Re lam|))``)
    and checked at ``x_check``.  Complex ``lam`` is accepted; the columns are
    scaled by their size at the first fit point so that the growing mode is
    resolved even when the other one is exponentially small.  The residual is
    relative to ``|psi(x_check)|``.

    Raises
    ------
    ConditioningError
        When the two fit points are close to a multiple of pi/lam apart.
    NonAsymptoticError
        When the residual at ``x_check`` exceeds ``tol``.
    """
    lam = complex(lam)
    if lam == 0:
        raise DomainError("c_function needs lambda != 0")
    if model.family is Family.BESSEL_KINGMAN:
        raise RegimeError("the oscillatory-decay fit does not apply to Bessel-Kingman models")
    if x_fit is None:
        x1 = 30.0
        x_fit = (x1, x1 + math.pi / (4 * abs(lam.real if lam.real else lam)))
    x1, x2 = (float(v) for v in x_fit)
    d = complex(lam) * (x2 - x1)
    if abs(np.sin(d)) < min_sin:
        raise ConditioningError(f"fit points {x1}, {x2} are nearly a multiple of pi/lambda apart (|sin| = {abs(np.sin(d)):.2e})")
    pts = np.array(sorted({x1, x2, float(x_check)}))
    psi = _integrate_psi(model, lam, pts, X_START)[0]
    val = dict(zip(pts.tolist(), psi))
    s_plus = np.exp(1j * lam * x1)
    s_minus = np.exp(-1j * lam * x1)
    M = np.array(
        [
            [np.exp(1j * lam * x1) / s_plus, np.exp(-1j * lam * x1) / s_minus],
            [np.exp(1j * lam * x2) / s_plus, np.exp(-1j * lam * x2) / s_minus],
        ]
    )
    coef = np.linalg.solve(M, np.array([val[x1], val[x2]]))
    c_plus = coef[0] / s_plus
    c_minus = coef[1] / s_minus
    pred = c_plus * np.exp(1j * lam * x_check) + c_minus * np.exp(-1j * lam * x_check)
    scale = max(abs(val[float(x_check)]), 1e-300)
    residual = float(abs(pred - val[float(x_check)]) / scale)
    if residual > tol:
        raise NonAsymptoticError(f"c-function fit residual {residual:.3e} at x = {x_check} exceeds {tol:.1e}")
    return CEstimate(lam=lam, c_plus=complex(c_plus), c_minus=complex(c_minus), residual=residual, x_fit=(x1, x2))


def c_table_csv(estimates) -> str:
    buf = io.StringIO()
    buf.write("lambda,re_c,im_c,residual\n")
    for e in estimates:
        buf.write(f"{e.lam.real:.17g},{e.c_plus.real:.17g},{e.c_plus.imag:.17g},{e.residual:.17g}\n")
    return buf.getvalue()
