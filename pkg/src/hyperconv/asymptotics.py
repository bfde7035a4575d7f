"""Asymptotic measures nu_y, their limit nu_infinity and regime diagnostics.

nu_y is a probability measure on [-y, y].  Closed forms exist for Naimark
(density e^t / (2 sinh y)) and Bessel-Kingman (a symmetric beta law).  For
other models nu_y is marched in y from the Volterra recursion

    2 A(y) nu_y = int_0^y  (A'(eta) - 2 rho A(eta)) e^{-2 rho (y - eta)} delta_{eta - y} * nu_eta
                         + (A'(eta) + 2 rho A(eta)) e^{+2 rho (y - eta)} delta_{y - eta} * nu_eta  d eta

written for A~(eta) = A(eta) e^{-2 rho eta}, whose derivative carries both
weights.  Each measure lives on the lattice -y + j h.
"""
from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import betainc

from .errors import (
    ConsistencyError,
    DomainError,
    RegimeError,
    ResolutionError,
)
from .kernel import convolve_H, kernel_density
from .measure import (
    GridMeasure,
    combine,
    exp_weight,
    fourier_stieltjes,
    neumann_inverse,
    pair,
    smooth_weights,
    tv_distance,
)
from .model import Family, SturmLiouvilleModel, exp_normalized_limit, index_rho, validate_model

log = logging.getLogger(__name__)

START_LEVELS = 10
MASS_WARN = 1e-6
MASS_FAIL = 1e-3
TRUNCATION = 1e-6
U2_TAIL = 1e-10
NEUMANN_TOL = 1e-9
FT_GRID = np.round(np.arange(-4.0, 4.0 + 1e-9, 0.1), 10)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def bk_nu_cdf(alpha0: float, y: float) -> Callable:
    """CDF of g_y^BK(t) proportional to (1 - (t/y)^2)^{alpha0/2 - 1} on [-y, y]."""

    def cdf(t):
        s = np.clip(np.asarray(t, dtype=float) / y, -1.0, 1.0)
        return 0.5 + 0.5 * np.sign(s) * betainc(0.5, alpha0 / 2, s * s)

    return cdf


def naimark_nu_cdf(y: float) -> Callable:
    """CDF of e^t / (2 sinh y) on [-y, y], written to avoid overflow."""
    den = -math.expm1(-2 * y)

    def cdf(t):
        t = np.clip(np.asarray(t, dtype=float), -y, y)
        return (np.exp(t - y) - math.exp(-2 * y)) / den

    return cdf


def _closed_cdf(model: SturmLiouvilleModel, y: float):
    if model.family is Family.NAIMARK:
        return naimark_nu_cdf(y)
    if model.family is Family.BESSEL_KINGMAN:
        return bk_nu_cdf(model.alpha0, y)
    return None


def _bk_cells(alpha0: float, n: int, h: float) -> np.ndarray:
    """Cell masses of g^BK_{nh} on -nh + j h, j = 0..2n (half cells at the ends)."""
    y = n * h
    t = -y + h * np.arange(2 * n + 1)
    cdf = bk_nu_cdf(alpha0, y)
    return cdf(np.minimum(t + h / 2, y)) - cdf(np.maximum(t - h / 2, -y))


# ---------------------------------------------------------------------------
# Volterra marching
# ---------------------------------------------------------------------------


def _reduced_A(model: SturmLiouvilleModel, rho: float, eta: np.ndarray) -> tuple[np.ndarray, float]:
    """A(eta) e^{-2 rho eta} divided by its maximum (the recursion is scale free), and that maximum."""
    with np.errstate(divide="ignore"):
        la = model.log_A_scaled(eta) - 2 * rho * eta
    top = float(np.max(la[np.isfinite(la)]))
    out = np.exp(la - top)
    out[0] = 0.0
    return out, math.exp(top)


class _Marcher:
    """Level-by-level solver of the recursion on the lattice -n h + j h.

    ``Lt`` holds the left-aligned sum over earlier levels scaled by
    e^{-4 rho y_n}; ``R`` holds the right-aligned sum in reversed order, so
    ``R[j]`` sits at position -j h after the shift by -eta.  Both grow by two
    cells per level.
    """

    def __init__(self, model: SturmLiouvilleModel, h: float, n_max: int, start_levels: int = START_LEVELS):
        self.rho = index_rho(model)
        self.h = h
        self.alpha0 = model.alpha0
        self.At, self.scale = _reduced_A(model, self.rho, h * np.arange(n_max + 2))
        self.q = math.exp(-4 * self.rho * h)
        self.start_levels = start_levels
        self.n = 0
        self.W = np.array([1.0])
        self.Lt = np.zeros(0)
        self.R = np.zeros(0)

    def _add_level(self, k: int, Wk: np.ndarray):
        At, n, h, rho = self.At, k + 1, self.h, self.rho
        if k == 0:
            dl = 0.5 * (At[1] * math.exp(-4 * rho * (n - 1) * h) - At[0] * math.exp(-4 * rho * n * h))
            dr = 0.5 * (At[1] - At[0])
        else:
            dl = 0.5 * (At[k + 1] * math.exp(-4 * rho * (n - k - 1) * h) - At[k - 1] * math.exp(-4 * rho * (n - k + 1) * h))
            dr = 0.5 * (At[k + 1] - At[k - 1])
        if k == 0:
            self.Lt = np.zeros(1)
            self.R = np.zeros(1)
        else:
            self.Lt = np.concatenate([self.Lt * self.q, [0.0, 0.0]])
            self.R = np.concatenate([self.R, [0.0, 0.0]])
        self.Lt[: 2 * k + 1] += dl * Wk
        self.R[: 2 * k + 1] += dr * Wk[::-1]

    def step(self) -> np.ndarray:
        """Advance one level and return the raw (unfiltered) weights."""
        self._add_level(self.n, self.W)
        n = self.n + 1
        if n <= self.start_levels:
            W = _bk_cells(self.alpha0, n, self.h)
        else:
            At = self.At
            cl = 0.5 * (At[n] - At[n - 1] * self.q)
            cr = 0.5 * (At[n] - At[n - 1])
            rhs = np.zeros(2 * n + 1)
            rhs[: 2 * n - 1] += self.Lt
            rhs[2:] += self.R[::-1]
            W = rhs / (2 * At[n] - cl - cr)
        self.n, self.W = n, W
        return W


def _checked_measure(W: np.ndarray, y: float, h: float, label: str) -> GridMeasure:
    drift = abs(W.sum() - 1.0)
    if drift > MASS_FAIL:
        raise ConsistencyError(f"{label}: mass drift {drift:.3e} exceeds {MASS_FAIL:g}; the recursion is inconsistent for this model")
    if drift > MASS_WARN:
        log.warning("%s: mass drift %.3e, renormalized", label, drift)
        W = W / W.sum()
    return GridMeasure.from_weights(-y, h, smooth_weights(W))


@dataclass(frozen=True, eq=False)
class NuFamily:
    """nu_y at selected y values, all on lattices -y + j h."""

    model: SturmLiouvilleModel
    h: float
    method: str
    measures: dict = field(default_factory=dict)

    def __getitem__(self, y: float) -> GridMeasure:
        key = min(self.measures, key=lambda v: abs(v - y))
        if abs(key - y) > 1e-9 * max(1.0, y):
            raise KeyError(y)
        return self.measures[key]

    @property
    def y_values(self) -> list:
        return sorted(self.measures)


def _levels(y_values: Sequence[float], h: float) -> tuple[float, dict]:
    ys = [float(v) for v in y_values]
    if not ys or min(ys) <= 0:
        raise DomainError("y values must be positive")
    if min(ys) < h * (1 - 1e-12):
        raise ResolutionError(f"y = {min(ys):g} is below the step h = {h:g}")
    # the lattice -y + j h must contain 0, so each y is rounded to a multiple of h
    return h, {y: max(1, int(round(y / h))) for y in ys}


def nu_family(
    model: SturmLiouvilleModel,
    y_values: Sequence[float],
    h: float = 1e-3,
    method: str = "auto",
) -> NuFamily:
    """nu_y for several y from a single march (or closed forms when available).

    Each y is rounded to the nearest multiple of ``h``; the keys of the
    result are the requested values.
    """
    h, levels = _levels(y_values, h)
    closed = method in ("auto", "closed-form") and _closed_cdf(model, 1.0) is not None
    if method == "closed-form" and not closed:
        raise RegimeError(f"no closed form for nu_y on model {model.name}")
    out = {}
    if closed:
        for y, n in levels.items():
            out[y] = GridMeasure.from_cdf(_closed_cdf(model, n * h), -n * h, n * h, h)
        return NuFamily(model=model, h=h, method="closed-form", measures=out)
    n_max = max(levels.values())
    marcher = _Marcher(model, h, n_max)
    wanted: dict[int, list] = {}
    for y, n in levels.items():
        wanted.setdefault(n, []).append(y)
    while marcher.n < n_max:
        W = marcher.step()
        for y in wanted.get(marcher.n, ()):
            out[y] = _checked_measure(W, marcher.n * h, h, f"nu_{y:g}")
    return NuFamily(model=model, h=h, method="marched", measures=out)


def nu_measure(model: SturmLiouvilleModel, y: float, h: float = 1e-3, method: str = "auto") -> GridMeasure:
    """The probability measure nu_y on [-y, y].

    Parameters
    ----------
    model : SturmLiouvilleModel
    y : float
        Positive; rounded to a multiple of ``h``.
    h : float
        Lattice step (also the marching step).
    method : {"auto", "closed-form", "marched"}
        "auto" uses closed forms for Naimark and Bessel-Kingman models.

    Raises
    ------
    ConsistencyError
        When the marched mass drifts by more than 1e-3.
    """
    return nu_family(model, [y], h, method)[y]


# ---------------------------------------------------------------------------
# nu_infinity
# ---------------------------------------------------------------------------


def _require_exponential(model: SturmLiouvilleModel) -> tuple[float, float]:
    rho = index_rho(model)
    if rho <= 0:
        raise RegimeError("nu_infinity needs rho > 0")
    lim = exp_normalized_limit(model)
    if lim is None:
        raise RegimeError("A(y) e^{-2 rho y} has no finite positive limit")
    return rho, lim


def truncation_point(model: SturmLiouvilleModel, eps: float = TRUNCATION, h: float = 1e-2) -> float:
    """Smallest y where A(y) e^{-2 rho y} has reached (1 - eps) of its limit."""
    rho, lim = _require_exponential(model)
    y = h
    while y < 200:
        val = math.exp(float(model.log_A_scaled(np.array([y]))[0]) - 2 * rho * y) / lim
        if val >= 1 - eps:
            return y
        y += h
    raise RegimeError("A(y) e^{-2 rho y} does not settle before y = 200")


def _limit_route(model, y, h, tol, y_start):
    if y is not None:
        return nu_measure(model, y, h).shift(-round(y / h) * h)
    ys = [y_start * 2**k for k in range(6)]
    fam = nu_family(model, ys, h)
    prev = None
    for yv in ys:
        cur = fam[yv].shift(-round(yv / h) * h)
        if prev is not None and tv_distance(cur, prev) < tol:
            return cur
        prev = cur
    raise ConsistencyError(f"limit route did not settle to {tol:g} by y = {ys[-1]:g}")


def _neumann_route(model, h):
    rho, lim = _require_exponential(model)
    L = truncation_point(model)
    n = int(math.ceil(L / h))
    closed = _closed_cdf(model, 1.0) is not None
    marcher = _Marcher(model, h, n)
    if closed:
        # closed-form nu_eta feed the same accumulator
        for k in range(n + 1):
            marcher._add_level(k, _closed_weights(model, k, h))
    else:
        while marcher.n < n:
            marcher.step()
        marcher._add_level(marcher.n, marcher.W)
    # R carries increments of the reduced A; divide by its limit in the same units
    source_w = 0.5 * marcher.R[::-1] / (lim / marcher.scale)
    source = GridMeasure.from_weights(-(len(source_w) - 1) * h, h, source_w)
    L2 = math.ceil(-math.log(U2_TAIL) / (2 * rho) / h) * h
    u2 = GridMeasure.from_cdf(lambda t: np.exp(2 * rho * np.asarray(t)), -L2, 0.0, h)
    out = neumann_inverse(u2, source, tol=NEUMANN_TOL)
    if closed:
        return out
    # marched levels carry the leapfrog's odd-even mode; filter it as for nu_y
    return GridMeasure.from_weights(out.origin, out.step, smooth_weights(out.weights()), out.atoms)


def _closed_weights(model, k, h):
    if k == 0:
        return np.array([1.0])
    return GridMeasure.from_cdf(_closed_cdf(model, k * h), -k * h, k * h, h).weights()


def nu_infty(
    model: SturmLiouvilleModel,
    route: str = "limit",
    h: float = 1e-3,
    y: float | None = None,
    tol: float = 1e-3,
    y_start: float = 2.0,
) -> GridMeasure:
    """nu_infinity by the limit of delta_{-y} * nu_y or by the Neumann series.

    Parameters
    ----------
    route : {"limit", "neumann", "both"}
        "limit" uses ``y`` when given, otherwise doubles y from ``y_start``
        until successive measures differ by less than ``tol``.  "neumann"
        inverts delta_0 - u_2/2 against the truncated source integral.
        "both" computes the two and raises if they differ by more than ``tol``.

    Raises
    ------
    RegimeError
        When rho = 0 or A(y) e^{-2 rho y} has no positive finite limit.
    ConsistencyError
        When the routes disagree ("both") or the limit route does not settle.
    """
    _require_exponential(model)
    if route == "limit":
        return _limit_route(model, y, h, tol, y_start)
    if route == "neumann":
        return _neumann_route(model, h)
    if route == "both":
        a = _limit_route(model, y, h, tol, y_start)
        b = _neumann_route(model, h)
        d = tv_distance(a, b)
        if d > tol:
            raise ConsistencyError(f"nu_infinity routes differ by {d:.3e} > {tol:g}")
        return b
    raise DomainError(f"unknown route {route!r}")


# ---------------------------------------------------------------------------
# regime diagnostics
# ---------------------------------------------------------------------------


def ramp_indicator(a: float, b: float, width: float) -> Callable:
    """Indicator of [a, b] with each edge replaced by a linear ramp of ``width`` centred on it."""

    def f(t):
        t = np.asarray(t, dtype=float)
        return np.clip(np.minimum(t - a, b - t) / width + 0.5, 0.0, 1.0)

    return f


def _shift_on_lattice(mu: GridMeasure, a: float) -> GridMeasure:
    return mu.shift(round(a / mu.step) * mu.step)


@dataclass
class RegimeReport:
    """Distance curves over y and the resulting verdict."""

    model: str
    x: float
    y_values: list
    d_inv: list = field(default_factory=list)
    d_shift: list = field(default_factory=list)
    d_center: list = field(default_factory=list)
    d_kernel: list = field(default_factory=list)
    weakstar: dict = field(default_factory=dict)
    dilated: dict = field(default_factory=dict)
    verdict: str = "inconclusive"
    ft_min: float | None = None
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "x": self.x,
            "y_values": list(self.y_values),
            "d_inv": list(self.d_inv),
            "d_shift": list(self.d_shift),
            "d_center": list(self.d_center),
            "d_kernel": list(self.d_kernel),
            "weakstar": {f"{k:g}": v for k, v in self.weakstar.items()},
            "dilated": {f"{k:g}": v for k, v in self.dilated.items()},
            "verdict": self.verdict,
            "ft_min": self.ft_min,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        """key = value header followed by one CSV block per curve."""
        buf = io.StringIO()
        buf.write(f"model = {self.model}\n")
        buf.write(f"x = {self.x:.17g}\n")
        buf.write(f"verdict = {self.verdict}\n")
        buf.write(f"ft_min = {'' if self.ft_min is None else format(self.ft_min, '.17g')}\n")
        for note in self.notes:
            buf.write(f"note = {note}\n")
        for name in ("d_inv", "d_shift", "d_center", "d_kernel"):
            vals = getattr(self, name)
            if vals:
                buf.write(f"\n[{name}]\ny,{name}\n")
                for yv, v in zip(self.y_values, vals):
                    buf.write(f"{yv:.17g},{v:.17g}\n")
        for name in ("weakstar", "dilated"):
            vals = getattr(self, name)
            if vals:
                buf.write(f"\n[{name}]\nx,{name}\n")
                for k in sorted(vals):
                    buf.write(f"{k:.17g},{vals[k]:.17g}\n")
        return buf.getvalue()


def _decreasing(vals) -> bool:
    return len(vals) >= 2 and all(b < a for a, b in zip(vals, vals[1:]))


def asymptotic_distances(
    model: SturmLiouvilleModel,
    x: float,
    y_values: Sequence[float],
    h: float = 1e-2,
    f_test: Callable | None = None,
    weakstar_x: Sequence[float] = (1.0, 2.0, 3.0),
    kernel_check: bool = False,
    nu_inf: GridMeasure | None = None,
) -> RegimeReport:
    """Distance curves that separate the three large-y regimes.

    d_inv(y) = |delta_x * nu_y - nu_y| and d_shift(y) = |nu_{y+x} - nu_y|
    for every model; d_center(y) = |delta_{-y} * nu_y - nu_inf| when rho > 0;
    with ``kernel_check`` also d_kernel(y) = |delta_{-y} * (delta_x * delta_y) - nu_x|.
    weakstar(x') = <nu_x', f_test>, by default against a ramped indicator of
    [-1/2, 1/2].  The verdict is assigned by :func:`_verdict`.
    """
    ys = [float(v) for v in y_values]
    if any(b <= a for a, b in zip(ys, ys[1:])):
        raise DomainError("y_values must be increasing")
    f_test = f_test or ramp_indicator(-0.5, 0.5, h)
    rho = index_rho(model)
    report = RegimeReport(model=model.name, x=float(x), y_values=ys)
    needed = sorted(set(ys) | {y + x for y in ys} | set(weakstar_x) | {x})
    fam = nu_family(model, needed, h)
    for y in ys:
        nu_y = fam[y]
        report.d_inv.append(tv_distance(_shift_on_lattice(nu_y, x), nu_y))
        report.d_shift.append(tv_distance(fam[y + x], nu_y))
    for xv in weakstar_x:
        report.weakstar[float(xv)] = pair(fam[xv], f_test)
    if kernel_check:
        nu_x = fam[x]
        for y in ys:
            k = kernel_density(model, x, y, h=h).measure
            report.d_kernel.append(tv_distance(_shift_on_lattice(k, -y), nu_x))
    if rho > 0 and exp_normalized_limit(model) is not None:
        try:
            if nu_inf is None:
                nu_inf = nu_infty(model, "limit", h=h, y=2 * ys[-1] + 4)
            for y in ys:
                report.d_center.append(tv_distance(_shift_on_lattice(fam[y], -y), nu_inf))
            report.ft_min = float(np.abs(fourier_stieltjes(nu_inf, FT_GRID)).min())
        except (RegimeError, ConsistencyError) as exc:
            report.notes.append(f"nu_infinity unavailable: {exc}")
    report.verdict = _verdict(model, report)
    return report


def _verdict(model: SturmLiouvilleModel, report: RegimeReport) -> str:
    rho = index_rho(model)
    if rho > 0:
        if report.d_center and _decreasing(report.d_center) and (report.ft_min or 0.0) > 0:
            return "nu-infinity-regime"
        return "inconclusive"
    if validate_model(model).A_bounded:
        vals = [report.dilated[k] for k in sorted(report.dilated)]
        if len(vals) >= 2 and all(b > a for a, b in zip(vals, vals[1:])) and vals[-1] > 0.5:
            return "bounded-A-regime"
        return "inconclusive"
    if _decreasing(report.d_inv) and _decreasing(report.d_shift):
        return "invariance-regime"
    return "inconclusive"


def dilated_nu(model: SturmLiouvilleModel, x: float, f: Callable, h: float = 1e-2, nu: GridMeasure | None = None) -> float:
    """<nu'_x, f> = int f(t / x) d nu_x(t) for bounded A and rho = 0.

    Raises
    ------
    RegimeError
        When A is unbounded or rho > 0.
    """
    if index_rho(model) != 0 or not validate_model(model).A_bounded:
        raise RegimeError("dilated_nu needs rho = 0 and a bounded A")
    nu = nu_measure(model, x, h) if nu is None else nu
    return pair(nu, lambda t: f(np.asarray(t) / x))


CLASSIFY_Y = (10.0, 20.0, 40.0, 80.0)
CLASSIFY_Y_EXP = (2.0, 4.0, 6.0, 8.0)
CLASSIFY_DILATED = (10.0, 20.0, 50.0)


def classify(model: SturmLiouvilleModel, h: float = 1e-2) -> RegimeReport:
    """Run the diagnostics suited to the model's growth class and give a verdict.

    rho > 0 with A e^{-2 rho y} convergent: d_center decreasing and
    min |nu_inf^(lambda)| > 0 over lambda in [-4, 4] give "nu-infinity-regime".
    rho = 0 and A bounded: <nu'_x, t^2> increasing over x in (10, 20, 50)
    give "bounded-A-regime".  rho = 0 and A unbounded: d_inv and d_shift
    decreasing over y in (10, 20, 40, 80) give "invariance-regime".
    """
    rho = index_rho(model)
    if rho > 0:
        return asymptotic_distances(model, 1.0, CLASSIFY_Y_EXP, h=h)
    if validate_model(model).A_bounded:
        fam = nu_family(model, CLASSIFY_DILATED, h)
        report = RegimeReport(model=model.name, x=1.0, y_values=[])
        for xv in CLASSIFY_DILATED:
            report.dilated[xv] = dilated_nu(model, xv, np.square, h, nu=fam[xv])
        report.verdict = _verdict(model, report)
        return report
    return asymptotic_distances(model, 1.0, CLASSIFY_Y, h=h)


def tau_transform(model: SturmLiouvilleModel, x: float, lam, h: float = 1e-3, method: str = "auto"):
    """Fourier-Stieltjes transform of tau_x = e^{-rho t} nu_x; equals phi_lambda(x)."""
    nu = nu_measure(model, x, h, method)
    return fourier_stieltjes(exp_weight(nu, index_rho(model)), lam)


# ---------------------------------------------------------------------------
# S and T
# ---------------------------------------------------------------------------


def s_map(model: SturmLiouvilleModel, mu: GridMeasure, h: float = 1e-3) -> GridMeasure:
    """S mu = int nu_x d mu(x) on the lattice h Z.

    Atoms and density quadrature nodes of ``mu`` become weighted nu_x; every
    nu_x is deposited onto h Z so the pieces add up.

    Raises
    ------
    ResolutionError
        When ``mu`` charges (0, h) (or anything at or below 0).
    """
    pos = list(mu.atom_positions())
    mass = list(mu.atom_masses())
    if mu.n:
        pos += list(mu.grid)
        mass += list(mu.weights())
    nodes = [(float(p), float(m)) for p, m in zip(pos, mass) if m != 0]
    if any(p < h * (1 - 1e-9) for p, _ in nodes):
        raise ResolutionError(f"mu charges points below the resolution h = {h:g}")
    if not nodes:
        return GridMeasure(origin=0.0, step=h)
    fam = nu_family(model, sorted({p for p, _ in nodes}), h)
    parts = []
    for p, m in nodes:
        nu = fam[p]
        j = math.floor(nu.origin / h + 1e-9)
        parts.append(nu.deposit(j * h, h).scale(m))
    return combine(parts)


def t_map(model: SturmLiouvilleModel, f: Callable, x: float, h: float = 1e-3) -> float:
    """(T f)(x) = <nu_x, f>."""
    return pair(nu_measure(model, x, h), f)


# ---------------------------------------------------------------------------
# approximate identity
# ---------------------------------------------------------------------------


def approx_identity_defect(model: SturmLiouvilleModel, x: float, n: int, h: float = 1e-2) -> float:
    """|delta_x * v_n - v_n| for the uniform probability v_n on [0, n].

    The hypergroup convolution is evaluated node by node on the lattice h Z;
    ``x`` is rounded to a multiple of ``h``.
    """
    if not x > 0 or n < 1:
        raise DomainError("x must be positive and n a positive integer")
    x = max(1, round(x / h)) * h
    v = GridMeasure.from_density(lambda t: np.full_like(t, 1.0 / n), 0.0, float(n), h)
    out = convolve_H(model, GridMeasure.atom(x, step=h), v, h=h)
    return tv_distance(out, v)
