"""Acceptance checks with measured value, expected value and tolerance.

Each check returns one or more :class:`CheckResult` entries; :func:`run_suite`
runs them all.  Tolerances can be overridden by name (see ``TOLERANCES``) and
every grid step can be multiplied by ``h_scale``.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .asymptotics import (
    approx_identity_defect,
    asymptotic_distances,
    classify,
    dilated_nu,
    nu_family,
    nu_infty,
    nu_measure,
)
from .eigen import c_function, phi_at, phi_lambda
from .kernel import HyperbolicGrid, kernel_density, translate_function
from .measure import exp_weight, fourier_stieltjes, tv_distance
from .model import bessel_kingman, bounded_demo, index_rho, jacobi, naimark

TOLERANCES = {
    "c1_mass": 1e-10,
    "c1_density": 1e-6,
    "c2_l1": 5e-3,
    "c2_order": 1.0,
    "c3_phi": 1e-6,
    "c3_sup": 1e-8,
    "c4_closed": 1e-6,
    "c4_numeric": 1e-2,
    "c5_rel": 0.10,
    "c6_rel": 0.05,
    "c6_marched": 1e-2,
    "c7_routes": 2e-3,
    "c7_ft": 1e-3,
    "c7_ftmin": 0.2,
    "c8_abs": 1e-3,
    "c8_identity": 1e-3,
    "c9_mass": 1e-4,
    "c9_density": 1e-8,
    "c9_support": 1.0,
    "c10_translate": 1e-2,
    "c11_defect": 0.1,
    "c12_dilated": 0.05,
}

SWEEP_DRAWS = 200
SWEEP_SEED = 20240917


@dataclass
class CheckResult:
    criterion: str
    measured: object
    expected: object
    tolerance: object
    provenance: str
    passed: bool
    seconds: float = 0.0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.criterion}: measured={_fmt(self.measured)} expected={_fmt(self.expected)} tol={_fmt(self.tolerance)}"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, complex):
        return f"{v.real:.6g}{v.imag:+.6g}i"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    return v


class Suite:
    """Holds the effective tolerances and step scale shared by all checks."""

    def __init__(self, tol: dict | None = None, h_scale: float = 1.0):
        unknown = set(tol or {}) - set(TOLERANCES)
        if unknown:
            raise KeyError(f"unknown tolerance name(s): {', '.join(sorted(unknown))}")
        self.tol = {**TOLERANCES, **(tol or {})}
        self.h_scale = float(h_scale)

    def h(self, base: float) -> float:
        return base * self.h_scale

    # -- 1 ----------------------------------------------------------------
    def c1(self):
        k = kernel_density(naimark(), 1.0, 2.0, h=self.h(1e-3), method="closed-form")
        return [
            _abs("1a Naimark kernel mass at (1,2)", k.mass(), 1.0, self.tol["c1_mass"], "closed-form kernel"),
            _abs("1b Naimark kernel k(2) at (1,2) vs listed 0.425518", float(k(2.0)), 0.425518, self.tol["c1_density"], "listed value"),
        ]

    def c1x(self):
        """k(2) against 1/(2 sinh 1) evaluated in double precision."""
        k = kernel_density(naimark(), 1.0, 2.0, h=self.h(1e-3), method="closed-form")
        exact = 1.0 / (2 * math.sinh(1.0))
        return [_abs("1x Naimark kernel k(2) at (1,2) vs 1/(2 sinh 1)", float(k(2.0)), exact, self.tol["c1_density"], "closed-form kernel sinh t/(2 sinh x sinh y)")]

    # -- 2 ----------------------------------------------------------------
    def c2(self):
        model = naimark()
        h1 = self.h(1e-3)
        errs = []
        for hh in (h1, h1 / 2):
            marched = kernel_density(model, 1.0, 2.0, h=hh, method="marched")
            exact = kernel_density(model, 1.0, 2.0, h=hh, method="closed-form")
            errs.append(tv_distance(marched.measure, exact.measure))
        order = math.log2(errs[0] / errs[1])
        return [
            _le("2a marched kernel L1 error, Naimark (1,2)", errs[0], 0.0, self.tol["c2_l1"], "closed-form kernel"),
            _ge("2b marched kernel convergence order (h, h/2)", order, self.tol["c2_order"], "step halving"),
        ]

    # -- 3 ----------------------------------------------------------------
    def c3(self):
        out = [_abs("3a Naimark phi_1(1) vs listed 0.716014", phi_at(naimark(), 1.0, 1.0).real, 0.716014, self.tol["c3_phi"], "listed value")]
        for model in (naimark(), bessel_kingman(2.0), jacobi(1.0, 0.0)):
            rho = index_rho(model)
            sol = phi_lambda(model, 1j * rho, 10.0, h=1e-2)
            sup = float(np.abs(sol.phi - 1).max())
            out.append(_le(f"3b sup |phi_(i rho) - 1| on [0,10], {model.name}", sup, 0.0, self.tol["c3_sup"], "phi at lambda = i rho is constant"))
        return out

    def c3x(self):
        """phi_1(1) against sin(1)/sinh(1) evaluated in double precision."""
        exact = math.sin(1.0) / math.sinh(1.0)
        return [_abs("3x Naimark phi_1(1) vs sin(1)/sinh(1)", phi_at(naimark(), 1.0, 1.0).real, exact, self.tol["c3_phi"], "closed form sin(lambda x)/(lambda sinh x)")]

    # -- 4 ----------------------------------------------------------------
    def c4(self):
        out = []
        nu = nu_measure(naimark(), 1.0, h=self.h(1e-3))
        ft = fourier_stieltjes(exp_weight(nu, 1.0), 1.0)
        out.append(_abs("4a Naimark tau_1^(1) vs phi_1(1), closed forms", ft, math.sin(1.0) / math.sinh(1.0), self.tol["c4_closed"], "closed-form nu and phi"))
        model = jacobi(1.0, 0.0)
        nu = nu_measure(model, 1.0, h=self.h(1e-3), method="marched")
        ft = fourier_stieltjes(exp_weight(nu, index_rho(model)), 1.0)
        out.append(_abs("4b Jacobi(1,0) tau_1^(1) vs phi_1(1), marched nu and ODE phi", ft, phi_at(model, 1.0, 1.0), self.tol["c4_numeric"], "cross-module identity"))
        return out

    # -- 5 ----------------------------------------------------------------
    def c5(self):
        model = naimark()
        ys = [3.0, 5.0]
        rep = asymptotic_distances(model, 1.0, ys, h=self.h(1e-3), kernel_check=True, weakstar_x=())
        c = (math.cosh(1.0) - 1) / math.sinh(1.0)
        return [
            _rel(f"5 |delta_-y*(delta_1*delta_y) - nu_1|, Naimark y={y:g}, rate e^-y (cosh1-1)/sinh1", d, math.exp(-y) * c, self.tol["c5_rel"], "listed rate")
            for y, d in zip(ys, rep.d_kernel)
        ]

    def c5x(self):
        """Same distance against the exact integral, which carries an extra 1/sinh y."""
        model = naimark()
        ys = [3.0, 5.0]
        rep = asymptotic_distances(model, 1.0, ys, h=self.h(1e-3), kernel_check=True, weakstar_x=())
        c = (math.cosh(1.0) - 1) / math.sinh(1.0)
        return [
            _rel(f"5x same distance vs exact e^-y (cosh1-1)/(sinh1 sinh y), y={y:g}", d, math.exp(-y) * c / math.sinh(y), self.tol["c5_rel"], "closed-form integral of |sinh(y+s)/sinh y - e^s|/(2 sinh 1)")
            for y, d in zip(ys, rep.d_kernel)
        ]

    # -- 6 ----------------------------------------------------------------
    def c6(self):
        model = bessel_kingman(2.0)
        h = self.h(1e-2)
        ys = [10.0, 50.0]
        closed = asymptotic_distances(model, 1.0, ys, h=h, weakstar_x=())
        fam = nu_family(model, ys, h, method="marched")
        out = []
        for y, d in zip(ys, closed.d_inv):
            out.append(_rel(f"6a BK(2) d_inv(1, {y:g}) vs 1/y", d, 1.0 / y, self.tol["c6_rel"], "uniform nu_y overlap"))
        for y, d in zip(ys, closed.d_inv):
            nu = fam[y]
            dm = tv_distance(nu.shift(round(1.0 / nu.step) * nu.step), nu)
            out.append(_abs(f"6b BK(2) d_inv(1, {y:g}) marched vs closed form", dm, d, self.tol["c6_marched"], "route agreement"))
        return out

    # -- 7 ----------------------------------------------------------------
    def c7(self):
        model = naimark()
        h = self.h(1e-3)
        lim = nu_infty(model, "limit", h=h, y=8.0)
        neu = nu_infty(model, "neumann", h=h)
        lams = np.round(np.arange(-4.0, 4.0 + 1e-9, 0.1), 10)
        ft_min = float(np.abs(fourier_stieltjes(neu, lams)).min())
        return [
            _le("7a Naimark nu_inf: limit (y=8) vs Neumann route, TV", tv_distance(lim, neu), 0.0, self.tol["c7_routes"], "route agreement"),
            _abs("7b Naimark nu_inf^(1)", fourier_stieltjes(neu, 1.0), 0.5 + 0.5j, self.tol["c7_ft"], "closed form 1/(1 - i lambda)"),
            _ge("7c min |nu_inf^(lambda)| over [-4,4] step 0.1", ft_min, self.tol["c7_ftmin"], "closed form |1/(1 - i lambda)| >= 1/sqrt 17"),
        ]

    # -- 8 ----------------------------------------------------------------
    def c8(self):
        model = naimark()
        rho = index_rho(model)
        out = [_abs("8a Naimark |c(1)|", abs(c_function(model, 1.0).c_plus), 1.0, self.tol["c8_abs"], "closed form c(lambda) = 1/(i lambda)")]
        neu = nu_infty(model, "neumann", h=self.h(1e-3))
        for lam in (0.5, 1.0, 2.0):
            c = c_function(model, -lam - 1j * rho).c_plus
            out.append(_abs(f"8b nu_inf^({lam:g}) vs c(-lambda - i rho)", fourier_stieltjes(neu, lam), c, self.tol["c8_identity"], "cross-module identity"))
        return out

    # -- 9 ----------------------------------------------------------------
    def c9(self):
        rng = np.random.default_rng(SWEEP_SEED)
        h = self.h(5e-3)
        worst_mass, worst_density, worst_support = 0.0, 0.0, 0.0
        for _ in range(SWEEP_DRAWS):
            kind = int(rng.integers(4))
            if kind == 0:
                model = naimark()
            elif kind == 1:
                model = bessel_kingman(float(rng.uniform(0.5, 5.0)))
            elif kind == 2:
                a, b = sorted(rng.uniform(-0.4, 2.0, 2))[::-1]
                model = jacobi(float(a), float(b))
            else:
                model = bounded_demo()
            x, y = (float(v) for v in rng.uniform(0.1, 3.0, 2))
            k = kernel_density(model, x, y, h=h, method="marched")
            W = k.measure.weights()
            nz = k.grid[W != 0]
            worst_mass = max(worst_mass, abs(k.mass() - 1))
            worst_density = min(worst_density, float(k.density.min()))
            if len(nz):
                spill = max(abs(x - y) - nz.min(), nz.max() - (x + y), 0.0) / k.h
                worst_support = max(worst_support, spill)
        return [
            _le(f"9a kernel mass defect, {SWEEP_DRAWS} random draws", worst_mass, 0.0, self.tol["c9_mass"], "invariant"),
            _ge(f"9b min kernel density, {SWEEP_DRAWS} random draws", worst_density, -self.tol["c9_density"], "invariant"),
            _le(f"9c support spill in grid cells, {SWEEP_DRAWS} random draws", worst_support, 0.0, self.tol["c9_support"], "invariant"),
        ]

    # -- 10 ---------------------------------------------------------------
    def c10(self):
        model = naimark()
        grid = HyperbolicGrid(x_max=3.1, h_x=self.h(1e-3))

        def f(t):
            t = np.asarray(t, dtype=float)
            return ((t >= 1.0) & (t <= 2.0)).astype(float)

        T = translate_function(model, f, 1e-2, grid)
        xs = T.x
        keep = (xs >= 0.1) & (xs <= 3.0) & (np.abs(xs - 1.0) >= 0.1) & (np.abs(xs - 2.0) >= 0.1)
        worst = float(np.abs(T.values[keep] - f(xs[keep])).max())
        return [_le("10 max |T_y f - f| away from jumps, y = 0.01", worst, 0.0, self.tol["c10_translate"], "continuity of translation")]

    # -- 11 ---------------------------------------------------------------
    def c11(self):
        model = naimark()
        ns = [25, 50, 100, 200]
        vals = [approx_identity_defect(model, 1.0, n, h=self.h(1e-2)) for n in ns]
        decreasing = all(b < a for a, b in zip(vals, vals[1:]))
        return [
            CheckResult("11a approximate identity defect strictly decreasing, n = 25..200", vals, "strictly decreasing", "-", "derived", decreasing),
            _le("11b approximate identity defect at n = 200", vals[-1], 0.0, self.tol["c11_defect"], "derived"),
        ]

    # -- 12 ---------------------------------------------------------------
    def c12(self):
        model = bounded_demo()
        val = dilated_nu(model, 50.0, np.square, h=self.h(1e-2))
        out = [_abs("12a bounded-demo <nu'_50, t^2> vs 1", val, 1.0, self.tol["c12_dilated"], "limit 1/2 (delta_-1 + delta_1)")]
        expected = {
            "naimark": "nu-infinity-regime",
            "bessel-kingman:2": "invariance-regime",
            "jacobi:1,0": "nu-infinity-regime",
            "bounded-demo": "bounded-A-regime",
        }
        models = [naimark(), bessel_kingman(2.0), jacobi(1.0, 0.0), bounded_demo()]
        got = {m.name: classify(m, h=self.h(1e-2)).verdict for m in models}
        out.append(CheckResult("12b classifier verdicts for the builtin models", got, expected, "exact", "growth class", got == expected))
        return out

    CHECKS = ("c1", "c1x", "c2", "c3", "c3x", "c4", "c5", "c5x", "c6", "c7", "c8", "c9", "c10", "c11", "c12")

    def run(self, only=None, progress: Callable | None = None) -> list:
        results = []
        for name in self.CHECKS:
            if only and name not in only:
                continue
            t0 = time.perf_counter()
            entries = getattr(self, name)()
            dt = time.perf_counter() - t0
            for e in entries:
                e.seconds = dt / len(entries)
                if progress:
                    progress(e)
            results.extend(entries)
        return results


def _abs(name, measured, expected, tol, prov) -> CheckResult:
    ok = bool(abs(measured - expected) <= tol)
    return CheckResult(name, measured, expected, tol, prov, ok)


def _rel(name, measured, expected, tol, prov) -> CheckResult:
    ok = bool(abs(measured - expected) <= tol * abs(expected))
    return CheckResult(name, measured, expected, f"{tol:g} relative", prov, ok)


def _le(name, measured, expected, tol, prov) -> CheckResult:
    return CheckResult(name, measured, expected, tol, prov, bool(measured <= expected + tol))


def _ge(name, measured, bound, prov) -> CheckResult:
    return CheckResult(name, measured, f">= {bound:g}", bound, prov, bool(measured >= bound))


def run_suite(tol: dict | None = None, h_scale: float = 1.0, only=None, progress=None) -> list:
    return Suite(tol, h_scale).run(only, progress)


def report_json(results: list) -> str:
    entries = []
    for r in results:
        d = r.as_dict()
        d.pop("seconds")
        entries.append(_jsonable(d))
    return json.dumps(entries, indent=2)
