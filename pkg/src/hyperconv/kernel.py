"""Translation kernels k_xy, generalized translations and hypergroup convolution.

The Cauchy problem

    u_yy + (A'(y)/A(y)) u_y = u_xx + (A'(x)/A(x)) u_x,   u(x, 0) = f(x), u_y(x, 0) = 0

is marched in y with a characteristic leapfrog scheme (h_y = h_x = h):

    A_{n+1/2}(u^{n+1} - u^n) - A_{n-1/2}(u^n - u^{n-1})
        = Abar_n [(1 + a_i h/2) u_{i+1} - 2 u_i + (1 - a_i h/2) u_{i-1}]

with ``a = A'/A`` at the grid point and ``Abar_n`` the mean of the two half-level
values.  The first level comes from the Euler-Poisson-Darboux startup
``u^1 = f + h^2 (f'' + a f') / (2 (1 + alpha0))``.  At CFL number one the
numerical and the exact domains of dependence coincide, so a kernel never
leaks outside [|x - y|, x + y].  Kernels are obtained as the exact adjoint of
this march: the weights g with ``u^N_I = sum_j g_j f_j`` are the discrete
measure delta_x * delta_y.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, ResolutionError, StabilityError, WindowError
from .measure import GridMeasure, smooth_weights
from .model import Family, SturmLiouvilleModel, eval_log_deriv, transmutation

log = logging.getLogger(__name__)

_SNAP_TOL = 1e-9


@dataclass(frozen=True)
class HyperbolicGrid:
    """Lattice for the marcher on [0, x_max]; only h_y == h_x is supported."""

    x_max: float
    h_x: float = 1e-3
    h_y: float | None = None

    def __post_init__(self):
        if not (self.x_max > 0 and self.h_x > 0):
            raise DomainError("x_max and h_x must be positive")
        hy = self.h_x if self.h_y is None else float(self.h_y)
        if hy > self.h_x * (1 + 1e-12):
            raise StabilityError(f"h_y = {hy:g} exceeds h_x = {self.h_x:g}; the explicit march would be unstable")
        if hy < self.h_x * (1 - 1e-12):
            raise DomainError("the characteristic scheme needs h_y == h_x")
        object.__setattr__(self, "h_y", hy)


@dataclass(frozen=True, eq=False)
class TranslationKernel:
    """delta_x * delta_y as a grid measure on [|x - y|, x + y]."""

    x: float
    y: float
    method: str
    measure: GridMeasure
    h: float
    pdf: Callable | None = None
    richardson: float | None = None

    @property
    def support(self) -> tuple[float, float]:
        return (abs(self.x - self.y), self.x + self.y)

    @property
    def grid(self) -> np.ndarray:
        return self.measure.grid

    @property
    def density(self) -> np.ndarray:
        return self.measure.density

    def mass(self) -> float:
        return self.measure.mass()

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.pdf is not None:
            lo, hi = self.support
            inside = (t >= lo) & (t <= hi)
            return np.where(inside, self.pdf(np.clip(t, lo, hi)), 0.0)
        return self.measure.density_at(t)

    def to_csv(self) -> str:
        lines = ["t,k"]
        lines += [f"{t:.17g},{k:.17g}" for t, k in zip(self.grid, self.density)]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# schemes
# ---------------------------------------------------------------------------

SCHEMES = ("auto", "weighted", "liouville")


def liouville_applicable(model: SturmLiouvilleModel) -> bool:
    """True when alpha0 = 2 and beta is odd at 0 (so q is bounded near 0).

    Then v = sqrt(A(x) A(y)) u turns the operator into v_yy = v_xx - (q(x) - q(y)) v,
    and the CFL-one leapfrog carries the kernel's jump discontinuities exactly
    along the characteristics.
    """
    if abs(model.alpha0 - 2.0) > 1e-12:
        return False
    # raw A'/A, bypassing any regularization of beta below x_regular
    pts = np.array([1e-2, 1e-3])
    b = model.direct_log_deriv(pts) - 2.0 / pts
    return bool(abs(b[1]) <= 0.2 * abs(b[0]) + 1e-9)


def _resolve_scheme(model: SturmLiouvilleModel, scheme: str) -> str:
    if scheme not in SCHEMES:
        raise DomainError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if scheme == "auto":
        return "liouville" if liouville_applicable(model) else "weighted"
    if scheme == "liouville" and not liouville_applicable(model):
        raise DomainError("the Liouville scheme needs alpha0 = 2 and an odd beta")
    return scheme


def _level_ratios(log_A: Callable, h: float, n_levels: int):
    """p_n = A_{n+1/2}/Abar_n and m_n = A_{n-1/2}/Abar_n for n = 1 .. n_levels."""
    n = np.arange(1, n_levels + 1, dtype=float)
    lp = log_A((n + 0.5) * h)
    lm = log_A((n - 0.5) * h)
    r = np.exp(lm - lp)
    return 2.0 / (1.0 + r), 2.0 * r / (1.0 + r)


def _space_coeffs(model: SturmLiouvilleModel, xs: np.ndarray, h: float):
    a = np.zeros_like(xs)
    pos = xs > _SNAP_TOL * h
    a[pos] = eval_log_deriv(model, xs[pos])
    return 1 + a * h / 2, 1 - a * h / 2


def _weighted_adjoint(cp, cm, p, m, s, N, potential=None):
    """Weights g with u^N[N] = g . u^0 for the A-weighted leapfrog on 2N+1 points.

    ``potential[n]`` (optional) is the array ``h^2 Q(x_i, y_n)`` subtracted
    inside the bracket at level n.
    """
    M = 2 * N + 1
    g_next = np.zeros(M)
    g_next[N] = 1.0
    g_next2 = np.zeros(M)
    for n in range(N - 1, 0, -1):
        t = np.zeros(M)
        t[1:] += cp[:-1] * g_next[:-1]
        t[:-1] += cm[1:] * g_next[1:]
        if potential is not None:
            t -= potential[n] * g_next
        t /= p[n - 1]
        if n + 1 <= N - 1:
            t -= (m[n] / p[n]) * g_next2
        g_next2, g_next = g_next, t
    g1, g2 = g_next, g_next2
    g0 = (1 - 2 * s) * g1
    g0[1:] += s * cp[:-1] * g1[:-1]
    g0[:-1] += s * cm[1:] * g1[1:]
    if potential is not None:
        g0 -= s * potential[0] * g1
    if N >= 2:
        g0 -= (m[0] / p[0]) * g2
    return g0


def _q_samples(model: SturmLiouvilleModel, xs: np.ndarray, ys: np.ndarray):
    q = transmutation(model).q
    floor = model.x_regular
    return q(np.maximum(xs, floor)), q(np.maximum(ys, floor))


def _log_c(model: SturmLiouvilleModel) -> float:
    """log of lim sqrt(A(y))/y at 0 (alpha0 = 2)."""
    eps = 1e-6
    return 0.5 * (float(model.log_A_scaled(np.array([eps]))[0]) - 2 * math.log(eps))


def _liouville_adjoint(qx, qy, h, N):
    """Weights G with v^N[N] = G . g for v_yy = v_xx - (q(x) - q(y)) v, v(.,0) = 0, v_y(.,0) = g."""
    M = 2 * N + 1
    G_next = np.zeros(M)
    G_next[N] = 1.0
    G_next2 = np.zeros(M)
    h2 = h * h
    for n in range(N - 1, 0, -1):
        t = np.zeros(M)
        t[1:] += G_next[:-1]
        t[:-1] += G_next[1:]
        t -= h2 * (qx - qy[n]) * G_next
        t -= G_next2
        G_next2, G_next = G_next, t
    G1 = G_next
    # v^1 = (h/6)(g_{i+1} + 4 g_i + g_{i-1}) - (h^3/6)(q(x_i) - q(0)) g_i
    Gg = (4 * h / 6) * G1 - (h**3 / 6) * (qx - qy[0]) * G1
    Gg[1:] += (h / 6) * G1[:-1]
    Gg[:-1] += (h / 6) * G1[1:]
    return Gg


def _marched_weights(model: SturmLiouvilleModel, x: float, y: float, N: int, h: float, scheme: str):
    """Raw kernel weights on the lattice x - y + h*[0, 2N] (needs y <= x)."""
    xs = (x - y) + h * np.arange(2 * N + 1)
    if scheme == "liouville":
        qx, qy = _q_samples(model, xs, h * np.arange(N + 1))
        G = _liouville_adjoint(qx, qy, h, N)
        la = model.log_A_scaled(xs)
        lx, ly = model.log_A_scaled(np.array([x, y]))
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.exp(_log_c(model) + 0.5 * la - 0.5 * lx - 0.5 * ly)
        fac[~np.isfinite(fac)] = 0.0
        return xs, G * fac
    s = 1.0 / (2.0 * (1.0 + model.alpha0))
    if scheme == "weighted":
        cp, cm = _space_coeffs(model, xs, h)
        p, m = _level_ratios(model.log_A_scaled, h, max(N - 1, 1))
        return xs, _weighted_adjoint(cp, cm, p, m, s, N)
    if scheme == "transmutation":
        a0 = model.alpha0
        a = np.zeros_like(xs)
        pos = xs > _SNAP_TOL * h
        a[pos] = a0 / xs[pos]
        cp, cm = 1 + a * h / 2, 1 - a * h / 2
        with np.errstate(divide="ignore"):
            p, m = _level_ratios(lambda t: a0 * np.log(t), h, max(N - 1, 1))
        qx, qy = _q_samples(model, xs, h * np.arange(N))
        potential = h * h * (qx[None, :] - qy[:, None])
        return xs, _weighted_adjoint(cp, cm, p, m, s, N, potential)
    raise DomainError(f"unknown scheme {scheme!r}")


def smooth_simpson_ends(W: np.ndarray) -> np.ndarray:
    """[1/4, 1/2, 1/4] filter whose two end rows map Simpson end weights to trapezoid ones.

    Column sums stay one, so mass and support are preserved.
    """
    S = smooth_weights(W)
    if len(W) >= 5:
        S[0] = 0.5 * W[0] + 0.25 * W[1]
        S[1] = 0.5 * W[0] + 0.5 * W[1] + 0.25 * W[2]
        S[-1] = 0.5 * W[-1] + 0.25 * W[-2]
        S[-2] = 0.5 * W[-1] + 0.5 * W[-2] + 0.25 * W[-3]
    return S


def _coarsen(fine: np.ndarray) -> np.ndarray:
    """Weights on the doubled-step lattice: F_{2j} + (F_{2j-1} + F_{2j+1})/2."""
    P = np.concatenate([[0.0], fine, [0.0]])
    return P[1:-1:2] + 0.5 * (P[0:-2:2] + P[2::2])


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


def _naimark_cdf(x: float, y: float):
    lo = abs(x - y)
    den = -math.expm1(-2 * x) * -math.expm1(-2 * y)

    def scaled_cosh(t):
        # cosh(t) / (2 sinh x sinh y), finite for large arguments
        t = np.asarray(t, dtype=float)
        return np.exp(t - x - y) * (1 + np.exp(-2 * t)) / den

    base = float(scaled_cosh(lo))
    return lambda t: scaled_cosh(t) - base


def _naimark_pdf(x: float, y: float):
    den = -math.expm1(-2 * x) * -math.expm1(-2 * y)
    return lambda t: np.exp(np.asarray(t, dtype=float) - x - y) * (1 - np.exp(-2 * np.asarray(t, dtype=float))) / den


# Fewest y-levels a marched kernel uses; below this the leapfrog start-up
# leaves visible negative undershoots near t = |x - y|.
MIN_LEVELS = 80


def _lattice(x: float, y: float, h: float, min_levels: int = 1):
    short = min(x, y)
    if short < h * (1 - 1e-12):
        raise ResolutionError(f"min(x, y) = {short:g} is below the grid step {h:g}")
    N = max(min_levels, int(round(short / h)))
    return N, short / N


def kernel_density(
    model: SturmLiouvilleModel,
    x: float,
    y: float,
    h: float = 1e-3,
    method: str = "auto",
    richardson: bool = False,
    smooth: bool = True,
    scheme: str = "auto",
) -> TranslationKernel:
    """Density of delta_x * delta_y.

    Parameters
    ----------
    model : SturmLiouvilleModel
    x, y : float
        Positive points of the hypergroup.
    h : float
        Target grid step; the step used is ``min(x, y)/N`` for the nearest
        integer N, so both ends of the support are lattice points.  Marched
        kernels use at least ``MIN_LEVELS`` levels, so the step may be finer.
    method : {"auto", "closed-form", "marched", "transmutation"}
        ``auto`` uses the closed form for Naimark models and the marcher
        otherwise.  ``transmutation`` marches the Bessel-Kingman operator with
        the potential q(x) - q(y) and rescales by B(t)/(B(x) B(y)).
    richardson : bool
        Also march at h/2 and store the L1 distance between the two
        resolutions (after coarsening the finer one) in ``.richardson``.
    smooth : bool
        Apply the mass-preserving [1/4, 1/2, 1/4] filter to the marched weights
        (it removes the odd-even mode of the leapfrog).
    scheme : {"auto", "weighted", "liouville"}
        Marching scheme; ``auto`` picks ``liouville`` when it applies.

    Returns
    -------
    TranslationKernel

    Raises
    ------
    ResolutionError
        When ``min(x, y) < h``.
    """
    if not (x > 0 and y > 0):
        raise DomainError("kernel_density needs x, y > 0")
    x, y = float(x), float(y)
    if method == "auto":
        method = "closed-form" if model.family is Family.NAIMARK else "marched"
    N, step = _lattice(x, y, h, 1 if method == "closed-form" else MIN_LEVELS)
    lo, hi = abs(x - y), x + y
    if method == "closed-form":
        if model.family is not Family.NAIMARK:
            raise DomainError("closed-form kernels are available for the Naimark model only")
        meas = GridMeasure.from_cdf(_naimark_cdf(x, y), lo, hi, step)
        return TranslationKernel(x=x, y=y, method=method, measure=meas, h=step, pdf=_naimark_pdf(x, y))
    if method not in ("marched", "transmutation"):
        raise DomainError(f"unknown kernel method {method!r}")
    big, small = max(x, y), min(x, y)
    scheme = "transmutation" if method == "transmutation" else _resolve_scheme(model, scheme)
    td = transmutation(model) if method == "transmutation" else None

    def weights_at(n_levels, hh):
        xs, W = _marched_weights(model, big, small, n_levels, hh, scheme)
        if smooth:
            W = smooth_simpson_ends(W) if scheme == "liouville" else smooth_weights(W)
        if td is not None:
            Bt = td.B(np.maximum(xs, model.x_regular))
            Bxy = td.B(np.array([big, small]))
            W = W * Bt / (Bxy[0] * Bxy[1])
        return W

    W = weights_at(N, step)
    diff = None
    if richardson:
        W_fine = weights_at(2 * N, step / 2)
        diff = float(np.abs(_coarsen(W_fine) - W).sum())
    meas = GridMeasure.from_weights(lo, step, W)
    label = method if method == "transmutation" else f"marched/{scheme}"
    return TranslationKernel(x=x, y=y, method=label, measure=meas, h=step, richardson=diff)


def kernel_cells(model: SturmLiouvilleModel, x: float, y: float, origin: float, step: float, h: float | None = None):
    """Cell masses of delta_x * delta_y on the lattice ``origin + step*j``.

    Returns ``(j0, masses)``.  Naimark kernels are integrated exactly over the
    cells; marched kernels are deposited cloud-in-cell.
    """
    lo, hi = abs(x - y), x + y
    if model.family is Family.NAIMARK:
        meas = GridMeasure.from_cdf(_naimark_cdf(x, y), lo, hi, step, origin=origin)
    else:
        k = kernel_density(model, x, y, h=step if h is None else h)
        j = math.floor((k.measure.origin - origin) / step + 1e-9)
        meas = k.measure.deposit(origin + step * j, step)
    j0 = int(round((meas.origin - origin) / step))
    return j0, meas.weights()


# ---------------------------------------------------------------------------
# translations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TranslatedFunction:
    """Samples of T_y f on ``x`` (which stops at x_max - y)."""

    y: float
    x: np.ndarray
    values: np.ndarray
    sup_f: float
    sup_u: float

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self.x, self.values)

    def to_csv(self) -> str:
        lines = ["x,Tf"] + [f"{a:.17g},{b:.17g}" for a, b in zip(self.x, self.values)]
        return "\n".join(lines) + "\n"


def translate_function(
    model: SturmLiouvilleModel,
    f: Callable,
    y: float,
    grid: HyperbolicGrid,
    scheme: str = "auto",
) -> TranslatedFunction:
    """Generalized translation T_y f on [0, x_max - y].

    Marches the Cauchy problem forward from u(., 0) = f.  Level n is trusted
    on the cone i in [n, M - n], which never touches x = 0, so no boundary
    condition is needed.  For x >= y the value is read at level N; for
    x < y the symmetry T_y f(x) = T_x f(y) reads it at level i, point N.

    Raises
    ------
    WindowError
        When x_max < y, i.e. f is not sampled far enough.
    """
    if not y > 0:
        raise DomainError("y must be positive")
    if grid.x_max < y * (1 - 1e-12):
        raise WindowError(f"x_max = {grid.x_max:g} must be at least y = {y:g}")
    scheme = _resolve_scheme(model, scheme)
    N = max(1, int(math.ceil(y / grid.h_x - 1e-9)))
    h = y / N
    M = int(math.floor(grid.x_max / h + 1e-9))
    xs = h * np.arange(M + 1)
    u0 = np.asarray(f(xs), dtype=float)
    if u0.shape != xs.shape or not np.all(np.isfinite(u0)):
        raise WindowError("f must return finite values on the whole grid [0, x_max]")
    march = _liouville_forward if scheme == "liouville" else _weighted_forward
    column, last, sup_u = march(model, u0, xs, h, N)
    out = np.empty(M - N + 1)
    out[:N] = column[:N]
    out[N:] = last[N : M - N + 1]
    return TranslatedFunction(y=y, x=xs[: M - N + 1], values=out, sup_f=float(np.abs(u0).max()), sup_u=float(sup_u))


def _cone_sup(u, n, M):
    lo, hi = n, M - n
    return np.abs(u[lo : hi + 1]).max() if hi >= lo else 0.0


def _weighted_forward(model, u0, xs, h, N):
    """Levels 0..N of the A-weighted march: (column at point N, level N, sup on cones)."""
    M = len(xs) - 1
    cp, cm = _space_coeffs(model, xs, h)
    cp_i, cm_i = cp[1:-1], cm[1:-1]
    p, m = _level_ratios(model.log_A_scaled, h, max(N - 1, 1))
    s = 1.0 / (2.0 * (1.0 + model.alpha0))
    column = np.empty(N + 1)
    column[0] = u0[N]
    u_prev = u0
    u = u0.copy()
    u[1:-1] = u0[1:-1] + s * (cp_i * u0[2:] - 2 * u0[1:-1] + cm_i * u0[:-2])
    column[1] = u[N]
    sup_u = max(np.abs(u0).max(), _cone_sup(u, 1, M))
    for n in range(1, N):
        new = u.copy()
        new[1:-1] = (cp_i * u[2:] + cm_i * u[:-2] - m[n - 1] * u_prev[1:-1]) / p[n - 1]
        u_prev, u = u, new
        column[n + 1] = u[N]
        sup_u = max(sup_u, _cone_sup(u, n + 1, M))
    return column, u, sup_u


def _liouville_forward(model, u0, xs, h, N):
    """Same as :func:`_weighted_forward` for the Liouville form v = sqrt(A(x) A(y)) u."""
    M = len(xs) - 1
    ys = h * np.arange(N + 1)
    qx, qy = _q_samples(model, xs, ys)
    la = model.log_A_scaled(xs)
    ref = float(la[-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        g = u0 * np.exp(0.5 * (la - ref))
    g[~np.isfinite(g)] = 0.0
    with np.errstate(divide="ignore"):
        ly = model.log_A_scaled(ys)
    log_c = _log_c(model)

    def to_u(v, n, idx):
        # u = v_scaled * c * exp(ref/2) / sqrt(A(x) A(y_n))
        return v * np.exp(log_c + 0.5 * ref - 0.5 * la[idx] - 0.5 * ly[n])

    column = np.empty(N + 1)
    column[0] = u0[N]
    v_prev = np.zeros_like(g)
    v = np.zeros_like(g)
    v[1:-1] = (h / 6) * (g[2:] + 4 * g[1:-1] + g[:-2]) - (h**3 / 6) * (qx[1:-1] - qy[0]) * g[1:-1]
    column[1] = to_u(v[N], 1, N)
    sup_u = max(np.abs(u0).max(), np.abs(to_u(v[1:M], 1, slice(1, M))).max() if M > 1 else 0.0)
    h2 = h * h
    for n in range(1, N):
        new = v.copy()
        new[1:-1] = v[2:] + v[:-2] - v_prev[1:-1] - h2 * (qx[1:-1] - qy[n]) * v[1:-1]
        v_prev, v = v, new
        column[n + 1] = to_u(v[N], n + 1, N)
        lo, hi = n + 1, M - n - 1
        if hi >= lo:
            sup_u = max(sup_u, np.abs(to_u(v[lo : hi + 1], n + 1, slice(lo, hi + 1))).max())
    last = np.zeros_like(v)
    idx = slice(1, M + 1)
    last[idx] = to_u(v[idx], N, idx)
    return column, last, sup_u


# ---------------------------------------------------------------------------
# hypergroup convolution
# ---------------------------------------------------------------------------


def _as_nodes(mu: GridMeasure, quad_step: float | None):
    """(positions, masses, is_atom) of atoms plus density quadrature nodes."""
    dens = mu.with_atoms(())
    if quad_step is not None and mu.n and quad_step > mu.step:
        dens = dens.deposit(mu.origin, quad_step)
    pos = [mu.atom_positions()]
    mass = [mu.atom_masses()]
    if dens.n:
        pos.append(dens.grid)
        mass.append(dens.weights())
    flag = np.concatenate([np.ones(len(pos[0]), bool), np.zeros(dens.n and len(pos[1]), bool)])
    pos = np.concatenate(pos)
    mass = np.concatenate(mass)
    keep = mass != 0
    return pos[keep], mass[keep], flag[keep]


def convolve_H(
    model: SturmLiouvilleModel,
    mu: GridMeasure,
    nu: GridMeasure,
    h: float | None = None,
    quad_step: float | None = None,
) -> GridMeasure:
    """Hypergroup convolution of measures on [0, oo).

    Atoms at 0 act as the identity.  Density parts are treated as atoms at
    their quadrature nodes (optionally after depositing onto ``quad_step``),
    and every pair contributes its kernel, so the result mass is the product
    of the masses.  Nodes in (0, h) are moved to h with a warning.
    """
    h = min(mu.step, nu.step) if h is None else h
    xa, ma, fa = _as_nodes(mu, quad_step)
    yb, mb, fb = _as_nodes(nu, quad_step)
    if np.any(xa < -_SNAP_TOL) or np.any(yb < -_SNAP_TOL):
        raise DomainError("hypergroup measures must live on [0, oo)")

    def snap(v):
        tiny = (v > _SNAP_TOL * h) & (v < h)
        if np.any(tiny):
            log.warning("moving %d node(s) in (0, h) to h = %g", int(tiny.sum()), h)
            v = np.where(tiny, h, v)
        return np.where(v <= _SNAP_TOL * h, 0.0, v)

    xa, yb = snap(xa), snap(yb)
    top = (xa.max() if len(xa) else 0.0) + (yb.max() if len(yb) else 0.0)
    n = int(math.ceil(top / h)) + 2
    W = np.zeros(n)
    atoms = []
    for x, mx, ax in zip(xa, ma, fa):
        for y, my, ay in zip(yb, mb, fb):
            w = mx * my
            if x == 0.0 or y == 0.0:
                # delta_0 is the identity: atoms stay atoms, density nodes
                # go back onto the grid cloud-in-cell
                if ax and ay:
                    atoms.append((x + y, w))
                else:
                    s = (x + y) / h
                    j = min(int(math.floor(s)), n - 2)
                    W[j] += w * (j + 1 - s)
                    W[j + 1] += w * (s - j)
                continue
            j0, cells = kernel_cells(model, float(x), float(y), 0.0, h)
            W[j0 : j0 + len(cells)] += w * cells
    return GridMeasure.from_weights(0.0, h, W, atoms)
