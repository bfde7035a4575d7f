"""Sturm-Liouville functions A and their transmutation data.

A Chebli-Trimeche hypergroup on [0, oo) is fixed by a function ``A`` with
``A(x) = x**alpha0 * a(x)`` near 0 and ``A'/A`` non-increasing.  Everything
downstream only ever needs the logarithmic derivative ``A'/A`` (kernels,
eigenfunctions) or ratios of values of ``A`` (the asymptotic recursion),
so models expose ``log_A`` and ``log_deriv`` as primitives.

Built-in families
-----------------
* Bessel-Kingman: ``A(x) = x**alpha0``
* Naimark: ``A(x) = sinh(x)**2``
* Jacobi: ``A(x) = (2 sinh x)**(2a+1) (2 cosh x)**(2b+1)``
* Custom: ``A`` given by an expression or a callable
"""
from __future__ import annotations

import dataclasses
import enum
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError, ModelFileError, NonConvergenceError
from .expr import compile_expression

log = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]

DEFAULT_X_REGULAR = 1e-3
_SERIES_CUTOFF = 0.05
_REL_STEP = 1e-4


class Family(str, enum.Enum):
    BESSEL_KINGMAN = "bessel-kingman"
    NAIMARK = "naimark"
    JACOBI = "jacobi"
    CUSTOM = "custom"


def _coth_minus_inv(x):
    """coth(x) - 1/x, with a Taylor branch near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SERIES_CUTOFF
    out = np.empty_like(x)
    xs = x[small]
    out[small] = xs / 3 - xs**3 / 45 + 2 * xs**5 / 945
    xl = x[~small]
    out[~small] = 1.0 / np.tanh(xl) - 1.0 / xl
    return out


def _inv_sq_minus_csch_sq(x):
    """1/x**2 - 1/sinh(x)**2 (derivative of coth x - 1/x, sign flipped)."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SERIES_CUTOFF
    out = np.empty_like(x)
    xs = x[small]
    out[small] = 1 / 3 - xs**2 / 15 + 2 * xs**4 / 189
    xl = x[~small]
    with np.errstate(over="ignore"):
        out[~small] = 1.0 / xl**2 - 1.0 / np.sinh(xl) ** 2
    return out


def _log_2sinh(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return x + np.log(-np.expm1(-2 * x))


def _log_2cosh(x):
    x = np.asarray(x, dtype=float)
    return x + np.log1p(np.exp(-2 * x))


@dataclass(frozen=True)
class SturmLiouvilleModel:
    """An immutable Sturm-Liouville function with its local and asymptotic data.

    ``log_A``, ``direct_log_deriv`` and ``beta`` are vectorized evaluators.
    ``beta(x) = A'(x)/A(x) - alpha0/x`` is bounded near 0; it is the route
    used for ``A'/A`` below ``x_regular``.
    """

    family: Family
    alpha0: float
    log_A: ArrayFn
    direct_log_deriv: ArrayFn
    beta: ArrayFn
    beta_prime: ArrayFn
    params: tuple = ()
    x_regular: float = DEFAULT_X_REGULAR
    name: str = ""
    rho_closed: float | None = None
    log_scale: float = 0.0
    expression: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise DomainError(f"alpha0 must be positive, got {self.alpha0}")
        if not self.x_regular > 0:
            raise DomainError("x_regular must be positive")

    # -- evaluators ---------------------------------------------------
    def A(self, x):
        return np.exp(self.log_A_scaled(x))

    def log_A_scaled(self, x):
        return self.log_A(np.asarray(x, dtype=float)) + self.log_scale

    def A_prime(self, x):
        return self.A(x) * self.log_deriv(x)

    def log_deriv(self, x):
        """A'(x)/A(x) for x > 0 (array-friendly); see :func:`eval_log_deriv`."""
        return eval_log_deriv(self, x)

    @property
    def rho(self) -> float:
        return index_rho(self)

    @property
    def beta_slope0(self) -> float:
        """lim_{x->0} beta(x)/x, i.e. beta'(0) (beta is odd for admissible A)."""
        eps = self.x_regular
        return float(self.beta(np.array([eps]))[0] / eps)

    def scaled(self, c: float) -> "SturmLiouvilleModel":
        """The model with A replaced by c*A (c > 0); defines the same hypergroup."""
        if not c > 0:
            raise DomainError("scale factor must be positive")
        return dataclasses.replace(self, log_scale=self.log_scale + math.log(c))

    def describe(self) -> str:
        return self.name or self.family.value


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def bessel_kingman(alpha0: float, x_regular: float = DEFAULT_X_REGULAR) -> SturmLiouvilleModel:
    alpha0 = float(alpha0)

    def log_A(x):
        with np.errstate(divide="ignore"):
            return alpha0 * np.log(x)

    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
    return SturmLiouvilleModel(
        family=Family.BESSEL_KINGMAN,
        alpha0=alpha0,
        log_A=log_A,
        direct_log_deriv=lambda x: alpha0 / np.asarray(x, dtype=float),
        beta=zero,
        beta_prime=zero,
        params=(alpha0,),
        x_regular=x_regular,
        name=f"bessel-kingman:{alpha0:g}",
        rho_closed=0.0,
    )


def naimark(x_regular: float = DEFAULT_X_REGULAR) -> SturmLiouvilleModel:
    return SturmLiouvilleModel(
        family=Family.NAIMARK,
        alpha0=2.0,
        log_A=lambda x: 2.0 * (_log_2sinh(x) - math.log(2.0)),
        direct_log_deriv=lambda x: 2.0 / np.tanh(np.asarray(x, dtype=float)),
        beta=lambda x: 2.0 * _coth_minus_inv(x),
        beta_prime=lambda x: 2.0 * _inv_sq_minus_csch_sq(x),
        x_regular=x_regular,
        name="naimark",
        rho_closed=1.0,
    )


def jacobi(alpha: float, beta: float, x_regular: float = DEFAULT_X_REGULAR) -> SturmLiouvilleModel:
    alpha, beta = float(alpha), float(beta)
    if not (alpha >= beta >= -0.5 and alpha > -0.5):
        raise DomainError(f"Jacobi parameters need alpha >= beta >= -1/2, alpha > -1/2; got ({alpha}, {beta})")
    a, b = 2 * alpha + 1, 2 * beta + 1

    def log_A(x):
        return a * _log_2sinh(x) + b * _log_2cosh(x)

    def direct(x):
        x = np.asarray(x, dtype=float)
        return a / np.tanh(x) + b * np.tanh(x)

    def beta_fn(x):
        return a * _coth_minus_inv(x) + b * np.tanh(np.asarray(x, dtype=float))

    def beta_prime(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return a * _inv_sq_minus_csch_sq(x) + b / np.cosh(x) ** 2

    return SturmLiouvilleModel(
        family=Family.JACOBI,
        alpha0=a,
        log_A=log_A,
        direct_log_deriv=direct,
        beta=beta_fn,
        beta_prime=beta_prime,
        params=(alpha, beta),
        x_regular=x_regular,
        name=f"jacobi:{alpha:g},{beta:g}",
        rho_closed=alpha + beta + 1,
    )


def custom(
    A: ArrayFn | str,
    alpha0: float | None = None,
    A_prime: ArrayFn | str | None = None,
    x_regular: float = DEFAULT_X_REGULAR,
    name: str = "custom",
) -> SturmLiouvilleModel:
    """Model from an arbitrary A.

    Without ``A_prime`` the derivative is a central difference with relative
    step 1e-4.  Without ``alpha0`` the exponent at 0 is read off the log-log
    slope of A near ``x_regular``.
    """
    expression = A if isinstance(A, str) else None
    A_fn = compile_expression(A) if isinstance(A, str) else A
    Ap_fn = compile_expression(A_prime) if isinstance(A_prime, str) else A_prime

    def log_A(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(A_fn(np.asarray(x, dtype=float)))

    def direct(x):
        x = np.asarray(x, dtype=float)
        if Ap_fn is not None:
            return Ap_fn(x) / A_fn(x)
        d = _REL_STEP * x
        return (log_A(x + d) - log_A(x - d)) / (2 * d)

    if alpha0 is None:
        x0 = x_regular
        alpha0 = float((log_A(np.array([2 * x0])) - log_A(np.array([x0])))[0] / math.log(2.0))
        alpha0 = round(alpha0, 6)
    alpha0 = float(alpha0)
    xr = x_regular

    def beta_fn(x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        small = x < xr
        out[~small] = direct(x[~small]) - alpha0 / x[~small]
        if np.any(small):
            at_xr = float(direct(np.array([xr]))[0] - alpha0 / xr)
            out[small] = at_xr * x[small] / xr
        return out

    def beta_prime(x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        small = x < 2 * xr
        xl = x[~small]
        d = _REL_STEP * xl
        out[~small] = (beta_fn(xl + d) - beta_fn(xl - d)) / (2 * d)
        if np.any(small):
            out[small] = float(beta_fn(np.array([xr]))[0]) / xr
        return out

    return SturmLiouvilleModel(
        family=Family.CUSTOM,
        alpha0=alpha0,
        log_A=log_A,
        direct_log_deriv=direct,
        beta=beta_fn,
        beta_prime=beta_prime,
        x_regular=x_regular,
        name=name,
        rho_closed=None,
        expression=expression,
    )


def bounded_demo() -> SturmLiouvilleModel:
    """A = (x/(1+x))**2: rho = 0 and A bounded."""
    return custom("(x/(1+x))^2", alpha0=2.0, A_prime="2*x/(1+x)^3", name="bounded-demo")


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def eval_log_deriv(model: SturmLiouvilleModel, x):
    """Return A'(x)/A(x).

    Below ``model.x_regular`` the value is assembled as ``alpha0/x + beta(x)``
    so the leading singularity is exact and never comes from a 0/0 quotient.
    Accepts scalars or arrays; raises :class:`DomainError` for x <= 0.
    """
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~(xa > 0)):
        raise DomainError("A'/A is only defined for x > 0")
    out = np.empty_like(xa)
    small = xa < model.x_regular
    if np.any(small):
        xs = xa[small]
        out[small] = model.alpha0 / xs + model.beta(xs)
    if np.any(~small):
        out[~small] = model.direct_log_deriv(xa[~small])
    return float(out[0]) if scalar else out


def index_rho(model: SturmLiouvilleModel, x_max: float = 200.0, tol: float = 1e-4) -> float:
    """Index rho = 1/2 lim A'/A.

    Closed form for the built-in families.  For custom models, 1/2 A'/A is
    sampled at x_max/8 ... x_max and extrapolated in powers of 1/x; the two
    three-point extrapolations must agree within ``tol``.
    """
    if model.rho_closed is not None:
        return float(model.rho_closed)
    return _numeric_rho(model, x_max, tol)


def _numeric_rho(model, x_max, tol):
    xs = x_max / np.array([8.0, 4.0, 2.0, 1.0])
    r = 0.5 * eval_log_deriv(model, xs)
    if not np.all(np.isfinite(r)):
        raise NonConvergenceError(f"A'/A not finite on {xs} (overflow?)")

    def extrapolate(pts, vals):
        V = np.vander(1.0 / pts, 3, increasing=True)
        return np.linalg.solve(V, vals)[0]

    e1 = extrapolate(xs[:3], r[:3])
    e2 = extrapolate(xs[1:], r[1:])
    if abs(e1 - e2) > tol:
        raise NonConvergenceError(
            f"1/2 A'/A has not stabilized: extrapolations {e1:.3e} vs {e2:.3e} "
            f"(samples {r.tolist()} at x={xs.tolist()})"
        )
    rho = float(e2)
    if abs(rho) < tol:
        rho = 0.0
    return max(rho, 0.0)


@dataclass(frozen=True)
class TransmutationData:
    """Evaluators for beta, B, q and their counterparts at infinity."""

    beta: ArrayFn
    B: ArrayFn
    q: ArrayFn
    beta_inf: ArrayFn
    B_inf: ArrayFn
    q_inf: ArrayFn


def _accumulated_integral(fn, x, start, epsabs=1e-10):
    """int_start^x fn for each entry of x.

    Nodes (the targets plus ``start``) are sorted and integrated piece by
    piece with adaptive quadrature, then summed cumulatively.
    """
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    nodes, inverse = np.unique(np.concatenate([[start], xa]), return_inverse=True)
    scalar_fn = lambda s: float(fn(np.array([s]))[0])  # noqa: E731
    pieces = np.zeros(len(nodes))
    for i in range(1, len(nodes)):
        val, err, info = integrate.quad(
            scalar_fn, nodes[i - 1], nodes[i], epsabs=epsabs, epsrel=1e-12, limit=200, full_output=1
        )[:3]
        if not np.isfinite(val) or (err > 1e3 * epsabs and err > 1e-9 * abs(val)):
            raise NonConvergenceError(
                f"quadrature on [{nodes[i - 1]:.6g}, {nodes[i]:.6g}] did not converge "
                f"(value {val:.6g}, error estimate {err:.2e}, {info.get('last', '?')} subintervals)"
            )
        pieces[i] = val
    cumulative = np.cumsum(pieces)
    cumulative -= cumulative[inverse[0]]
    return cumulative[inverse[1:]]


def transmutation(model: SturmLiouvilleModel) -> TransmutationData:
    """beta, B, q, beta_inf, B_inf, q_inf for ``model``.

    ``B(x) = exp(1/2 int_0^x beta)`` and ``B_inf(x) = exp(1/2 int_1^x beta_inf)``
    come from accumulated adaptive quadrature.
    """
    a0 = model.alpha0
    rho = index_rho(model)
    beta = model.beta

    def beta_over_x(x):
        x = np.asarray(x, dtype=float)
        return beta(x) / x

    def q(x):
        x = np.asarray(x, dtype=float)
        b = beta(x)
        return model.beta_prime(x) / 2 + b**2 / 4 + beta_over_x(x) * a0 / 2

    def beta_inf(x):
        return eval_log_deriv(model, np.asarray(x, dtype=float)) - 2 * rho

    def q_inf(x):
        x = np.asarray(x, dtype=float)
        bi = beta_inf(x)
        bi_prime = model.beta_prime(x) - a0 / x**2
        return bi_prime / 2 + bi**2 / 4 + bi * rho

    def B(x):
        return np.exp(0.5 * _accumulated_integral(beta, x, 0.0))

    def B_inf(x):
        return np.exp(0.5 * _accumulated_integral(beta_inf, x, 1.0))

    return TransmutationData(beta=beta, B=B, q=q, beta_inf=beta_inf, B_inf=B_inf, q_inf=q_inf)


@dataclass
class ValidationReport:
    model: str
    passed: bool
    failures: list[str]
    rho: float
    growth_class: str
    A_bounded: bool
    A_limit: float | None = None

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "passed": self.passed,
            "failures": list(self.failures),
            "rho": self.rho,
            "growth_class": self.growth_class,
            "A_bounded": self.A_bounded,
            "A_limit": self.A_limit,
        }


def default_grid() -> np.ndarray:
    return np.unique(np.concatenate([np.geomspace(1e-6, 1.0, 121), np.linspace(1.0, 200.0, 399)]))


def exp_normalized_limit(model: SturmLiouvilleModel, points: Sequence[float] = (20.0, 40.0), tol: float = 1e-6):
    """lim A(y) e^{-2 rho y} estimated at ``points``; None if not stable."""
    rho = index_rho(model)
    vals = np.exp(model.log_A_scaled(np.asarray(points, dtype=float)) - 2 * rho * np.asarray(points))
    if not np.all(np.isfinite(vals)) or vals[-1] <= 0:
        return None
    if abs(vals[-1] / vals[-2] - 1) > tol:
        return None
    return float(vals[-1])


def validate_model(model: SturmLiouvilleModel, grid=None, rho_tol: float = 1e-2) -> ValidationReport:
    """Check the admissibility conditions on a sample grid and classify growth."""
    xs = default_grid() if grid is None else np.asarray(grid, dtype=float)
    xs = np.sort(xs[xs > 0])
    failures: list[str] = []
    logA = model.log_A_scaled(xs)
    ld = eval_log_deriv(model, xs)
    if not np.all(np.isfinite(logA)):
        failures.append("A(x) is not positive and finite on the grid")
    if not np.all(np.isfinite(ld)) or np.any(ld < -1e-12):
        failures.append("A'(x) < 0 somewhere on the grid")
    slack = 1e-9 * np.maximum(1.0, np.abs(ld[:-1]))
    if np.any(np.diff(ld) > slack):
        i = int(np.argmax(np.diff(ld) - slack))
        failures.append(f"A'/A increases between x={xs[i]:.4g} and x={xs[i + 1]:.4g}")
    small = xs[:3]
    ratio = model.log_A_scaled(small) - model.alpha0 * np.log(small)
    if not np.all(np.isfinite(ratio)) or np.ptp(ratio) > 1e-3:
        failures.append("A(x)/x^alpha0 does not stabilize as x -> 0+")
    try:
        rho = index_rho(model)
    except NonConvergenceError as exc:
        failures.append(str(exc))
        rho = float("nan")
    if np.isfinite(rho) and abs(rho - 0.5 * ld[-1]) > rho_tol:
        failures.append(f"rho={rho:.6g} differs from 1/2 A'/A(x={xs[-1]:g})={0.5 * ld[-1]:.6g}")

    big = np.array([1e2, 1e3, 1e4])
    with np.errstate(over="ignore", invalid="ignore"):
        big_log = model.log_A_scaled(big)
    A_bounded = bool(np.all(np.isfinite(big_log)) and big_log[2] - big_log[1] < 1e-2)
    A_limit = None
    if np.isfinite(rho) and rho > 0:
        A_limit = exp_normalized_limit(model)
        growth = "exponential-normalizable" if A_limit is not None else "exponential"
    elif np.isfinite(rho):
        growth = "sub-exponential"
    else:
        growth = "unknown"
    return ValidationReport(
        model=model.describe(),
        passed=not failures,
        failures=failures,
        rho=rho,
        growth_class=growth,
        A_bounded=A_bounded,
        A_limit=A_limit,
    )


# ---------------------------------------------------------------------------
# aliases and model files
# ---------------------------------------------------------------------------

BUILTIN_ALIASES = ("naimark", "bessel-kingman:<alpha0>", "jacobi:<alpha>,<beta>", "bounded-demo")


def from_alias(alias: str) -> SturmLiouvilleModel:
    text = alias.strip().lower()
    head, _, arg = text.partition(":")
    try:
        if head == "naimark" and not arg:
            return naimark()
        if head == "bounded-demo" and not arg:
            return bounded_demo()
        if head in ("bessel-kingman", "bk") and arg:
            return bessel_kingman(float(arg))
        if head == "jacobi" and arg:
            a, b = (float(v) for v in arg.split(","))
            return jacobi(a, b)
    except ValueError as exc:
        raise ModelFileError(f"bad parameters in model alias {alias!r}: {exc}") from None
    raise ModelFileError(f"unknown model alias {alias!r}; expected one of {', '.join(BUILTIN_ALIASES)}")


def parse_model_text(text: str) -> SturmLiouvilleModel:
    """Parse ``key = value`` lines (``#`` comments) into a model."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ModelFileError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        entries[key.lower()] = value
    family = entries.pop("family", None)
    if family is None:
        raise ModelFileError("model file lacks a 'family' entry")
    x_regular = float(entries.pop("x_regular", DEFAULT_X_REGULAR))

    def need(key):
        if key not in entries:
            raise ModelFileError(f"family {family!r} requires '{key}'")
        return entries.pop(key)

    try:
        fam = family.lower()
        if fam == "naimark":
            model = naimark(x_regular)
        elif fam in ("bessel-kingman", "besselkingman"):
            model = bessel_kingman(float(need("alpha0")), x_regular)
        elif fam == "jacobi":
            model = jacobi(float(need("alpha")), float(need("beta")), x_regular)
        elif fam == "bounded-demo":
            model = bounded_demo()
        elif fam == "custom":
            alpha0 = entries.pop("alpha0", None)
            model = custom(
                need("a"),
                alpha0=None if alpha0 is None else float(alpha0),
                A_prime=entries.pop("a_prime", None),
                x_regular=x_regular,
                name=entries.pop("name", "custom"),
            )
        else:
            raise ModelFileError(f"unknown family {family!r}")
    except ValueError as exc:
        if isinstance(exc, ModelFileError):
            raise
        raise ModelFileError(str(exc)) from None
    entries.pop("name", None)
    if entries:
        raise ModelFileError(f"unrecognized keys: {', '.join(sorted(entries))}")
    return model


def load_model(source: str) -> SturmLiouvilleModel:
    """Resolve a CLI ``--model`` argument: a file path or a built-in alias."""
    if os.path.isfile(source):
        with open(source, encoding="utf-8") as fh:
            return parse_model_text(fh.read())
    return from_alias(source)
