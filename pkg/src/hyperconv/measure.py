"""Signed measures on an interval: exact atoms plus a density on a uniform grid.

A :class:`GridMeasure` stores density samples ``f_j`` at ``t_j = origin + j*step``.
Every integral uses the trapezoid weights ``w_j`` (``step`` inside, ``step/2``
at both ends), so the measure of the density part is the discrete measure
``sum_j w_j f_j delta_{t_j}`` with the piecewise-linear reading in between.
The density is zero outside the window, so jumps at both ends are allowed.

Because every operation (mass, pairing, Fourier-Stieltjes transform, real-line
convolution) is a sum over the same cell weights, mass multiplies exactly under
convolution and the transform is exactly multiplicative.
"""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import signal

from .errors import DomainError, InvertibilityError, WindowError

log = logging.getLogger(__name__)

MAX_POINTS = 20_000_000
_LATTICE_TOL = 1e-9


def trapezoid_weights(n: int, step: float) -> np.ndarray:
    w = np.full(n, float(step))
    if n == 0:
        return w
    if n == 1:
        # a single sample carries no length
        w[0] = 0.0
        return w
    w[0] = w[-1] = step / 2
    return w


def _merge_atoms(atoms: Iterable[tuple[float, float]], drop_zero: bool = True) -> tuple:
    merged: dict[float, float] = {}
    for pos, mass in atoms:
        pos = float(pos)
        merged[pos] = merged.get(pos, 0.0) + float(mass)
    items = sorted(merged.items())
    if drop_zero:
        items = [(p, m) for p, m in items if m != 0.0]
    return tuple(items)


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Atoms ``(position, mass)`` plus density samples on a uniform grid."""

    atoms: tuple = ()
    origin: float = 0.0
    step: float = 1e-3
    density: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if not self.step > 0:
            raise DomainError(f"grid step must be positive, got {self.step}")
        dens = np.asarray(self.density, dtype=float)
        if dens.ndim != 1:
            raise DomainError("density must be one-dimensional")
        dens = dens.copy()
        dens.setflags(write=False)
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "atoms", _merge_atoms(self.atoms))
        object.__setattr__(self, "origin", float(self.origin))
        object.__setattr__(self, "step", float(self.step))

    # -- constructors -------------------------------------------------
    @classmethod
    def atom(cls, position: float, mass: float = 1.0, step: float = 1e-3) -> "GridMeasure":
        return cls(atoms=((position, mass),), origin=position, step=step)

    @classmethod
    def from_weights(cls, origin, step, weights, atoms=()) -> "GridMeasure":
        weights = np.asarray(weights, dtype=float)
        w = trapezoid_weights(len(weights), step)
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = np.where(w > 0, weights / np.where(w > 0, w, 1.0), 0.0)
        if len(weights) == 1 and weights[0] != 0.0:
            atoms = tuple(atoms) + ((origin, float(weights[0])),)
        return cls(atoms=atoms, origin=origin, step=step, density=dens)

    @classmethod
    def from_density(cls, fn: Callable, lo: float, hi: float, step: float) -> "GridMeasure":
        """Sample ``fn`` at the grid points of [lo, hi] (step adjusted to fit)."""
        n = max(1, int(round((hi - lo) / step)))
        h = (hi - lo) / n
        t = lo + h * np.arange(n + 1)
        return cls(origin=lo, step=h, density=np.asarray(fn(t), dtype=float))

    @classmethod
    def from_cdf(cls, cdf: Callable, lo: float, hi: float, step: float, origin: float | None = None) -> "GridMeasure":
        """Cell masses of an absolutely continuous measure carried by [lo, hi].

        Cell ``j`` is ``[t_j - step/2, t_j + step/2]`` clipped to [lo, hi]; with
        the default ``origin = lo`` and ``(hi - lo)/step`` integral the end cells
        are half cells, matching the trapezoid weights.  Total mass is exactly
        ``cdf(hi) - cdf(lo)`` up to rounding.
        """
        if origin is None:
            n = max(1, int(round((hi - lo) / step)))
            step = (hi - lo) / n
            origin = lo
            j0, j1 = 0, n
        else:
            j0 = int(np.floor((lo - origin) / step + 0.5 - _LATTICE_TOL))
            j1 = int(np.ceil((hi - origin) / step - 0.5 + _LATTICE_TOL))
        idx = np.arange(j0, j1 + 1)
        t = origin + step * idx
        edges = np.concatenate([[lo], np.clip(t[:-1] + step / 2, lo, hi), [hi]])
        c = np.asarray(cdf(edges), dtype=float)
        masses = np.diff(c)
        return cls.from_weights(origin + step * j0, step, masses)

    # -- basic views --------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.density)

    @property
    def grid(self) -> np.ndarray:
        return self.origin + self.step * np.arange(self.n)

    @property
    def end(self) -> float:
        return self.origin + self.step * max(self.n - 1, 0)

    def weights(self) -> np.ndarray:
        return self.density * trapezoid_weights(self.n, self.step)

    def atom_positions(self) -> np.ndarray:
        return np.array([p for p, _ in self.atoms], dtype=float)

    def atom_masses(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms], dtype=float)

    def mass(self) -> float:
        return float(self.atom_masses().sum() + self.weights().sum())

    def tv_norm(self) -> float:
        return float(np.abs(self.atom_masses()).sum() + np.abs(self.weights()).sum())

    def support(self) -> tuple[float, float]:
        """Smallest interval carrying the atoms and the nonzero density samples."""
        pts = list(self.atom_positions())
        nz = np.nonzero(self.density)[0]
        if len(nz):
            pts += [self.origin + self.step * nz[0], self.origin + self.step * nz[-1]]
        if not pts:
            return (0.0, 0.0)
        return (min(pts), max(pts))

    def density_at(self, t) -> np.ndarray:
        """Piecewise-linear density, zero outside the window."""
        t = np.asarray(t, dtype=float)
        if self.n == 0:
            return np.zeros_like(t)
        if self.n == 1:
            return np.zeros_like(t)
        return np.interp(t, self.grid, self.density, left=0.0, right=0.0)

    def with_atoms(self, atoms) -> "GridMeasure":
        return GridMeasure(atoms=atoms, origin=self.origin, step=self.step, density=self.density)

    # -- arithmetic ---------------------------------------------------
    def scale(self, c: float) -> "GridMeasure":
        return GridMeasure(
            atoms=tuple((p, c * m) for p, m in self.atoms), origin=self.origin, step=self.step, density=c * self.density
        )

    def shift(self, a: float) -> "GridMeasure":
        """delta_a convolved with self."""
        return GridMeasure(
            atoms=tuple((p + a, m) for p, m in self.atoms), origin=self.origin + a, step=self.step, density=self.density
        )

    def reflect(self) -> "GridMeasure":
        """Image under t -> -t."""
        return GridMeasure(
            atoms=tuple((-p, m) for p, m in self.atoms), origin=-self.end, step=self.step, density=self.density[::-1]
        )

    def __add__(self, other: "GridMeasure") -> "GridMeasure":
        return combine([self, other])

    def __sub__(self, other: "GridMeasure") -> "GridMeasure":
        return combine([self, other.scale(-1.0)])

    # -- lattice handling ---------------------------------------------
    def on_lattice(self, origin: float, step: float) -> bool:
        if abs(step - self.step) > _LATTICE_TOL * step:
            return False
        if self.n == 0:
            return True
        k = (self.origin - origin) / step
        return abs(k - round(k)) < _LATTICE_TOL * max(1.0, abs(k))

    def embed(self, origin: float, n: int) -> "GridMeasure":
        """Same weights on the window ``origin + step*[0, n)`` of a shared lattice."""
        if not self.on_lattice(origin, self.step):
            raise DomainError("embed requires a shared lattice")
        W = np.zeros(n)
        if self.n:
            k = int(round((self.origin - origin) / self.step))
            if k < 0 or k + self.n > n:
                raise WindowError("target window does not contain the measure")
            W[k : k + self.n] = self.weights()
        return GridMeasure.from_weights(origin, self.step, W, self.atoms)

    def deposit(self, origin: float, step: float, n: int | None = None, atoms_too: bool = False) -> "GridMeasure":
        """Cloud-in-cell transfer of the density weights to another lattice.

        Exact in mass.  ``atoms_too`` also spreads atoms onto the grid.
        """
        pts = self.grid
        W = self.weights()
        atoms = self.atoms
        if atoms_too and atoms:
            pts = np.concatenate([pts, self.atom_positions()])
            W = np.concatenate([W, self.atom_masses()])
            atoms = ()
        if n is None:
            hi = pts.max() if len(pts) else origin
            n = int(np.floor((hi - origin) / step + _LATTICE_TOL)) + 2
        if n > MAX_POINTS:
            raise WindowError(f"deposit target of {n} points exceeds the limit {MAX_POINTS}")
        out = np.zeros(n)
        if len(pts):
            s = (pts - origin) / step
            i = np.floor(s + _LATTICE_TOL).astype(np.int64)
            frac = np.clip(s - i, 0.0, 1.0)
            frac[np.abs(frac) < _LATTICE_TOL] = 0.0
            if np.any(i < 0) or np.any(i + (frac > 0) > n - 1):
                raise WindowError("deposit target window does not contain the measure")
            np.add.at(out, i, W * (1 - frac))
            hit = frac > 0
            np.add.at(out, i[hit] + 1, W[hit] * frac[hit])
        return GridMeasure.from_weights(origin, step, out, atoms)

    def resample(self, step: float, origin: float | None = None) -> "GridMeasure":
        """Transfer to a lattice of the given step.

        Same or coarser steps use cloud-in-cell deposit (mass exact).  Finer
        steps interpolate the density linearly and rescale to the old mass.
        """
        if self.n == 0:
            return GridMeasure(atoms=self.atoms, origin=self.origin if origin is None else origin, step=step)
        if origin is None:
            origin = self.origin
        lo = origin + step * np.floor((self.origin - origin) / step + _LATTICE_TOL)
        if step >= self.step * (1 - 1e-12):
            return self.deposit(lo, step)
        n = int(np.ceil((self.end - lo) / step - _LATTICE_TOL)) + 1
        if n > MAX_POINTS:
            raise WindowError(f"resampled grid of {n} points exceeds the limit {MAX_POINTS}")
        t = lo + step * np.arange(n)
        dens = self.density_at(t)
        new = GridMeasure(atoms=self.atoms, origin=lo, step=step, density=dens)
        old_mass = self.weights().sum()
        new_mass = new.weights().sum()
        if new_mass != 0.0 and old_mass != 0.0:
            dens = dens * (old_mass / new_mass)
        return GridMeasure(atoms=self.atoms, origin=lo, step=step, density=dens)

    def to_density(self) -> "GridMeasure":
        """Spread atoms onto the grid (cloud in cell); keeps the lattice."""
        if not self.atoms:
            return self
        lo = min(self.origin if self.n else np.inf, self.atom_positions().min())
        k = np.floor((lo - self.origin) / self.step + _LATTICE_TOL)
        start = self.origin + self.step * min(k, 0)
        return self.deposit(start, self.step, atoms_too=True)

    def trim(self, eps: float) -> "GridMeasure":
        """Drop density tails whose total variation is below ``eps`` on each side."""
        if self.n == 0 or eps <= 0:
            return self
        aw = np.abs(self.weights())
        left = np.cumsum(aw)
        right = np.cumsum(aw[::-1])
        i0 = int(np.searchsorted(left, eps, side="right"))
        i1 = self.n - int(np.searchsorted(right, eps, side="right"))
        if i1 - i0 < 2:
            i0, i1 = max(0, min(i0, self.n - 2)), min(self.n, max(i1, i0 + 2))
        if i0 == 0 and i1 == self.n:
            return self
        W = self.weights()[i0:i1]
        return GridMeasure.from_weights(self.origin + self.step * i0, self.step, W, self.atoms)

    # -- CSV ------------------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# origin {self.origin:.17g}\n")
        buf.write(f"# step {self.step:.17g}\n")
        for p, m in self.atoms:
            buf.write(f"# atom {p:.17g} {m:.17g}\n")
        buf.write("t,density\n")
        for t, f in zip(self.grid, self.density):
            buf.write(f"{t:.17g},{f:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridMeasure":
        origin = step = None
        atoms = []
        dens = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] == "origin":
                    origin = float(parts[1])
                elif parts and parts[0] == "step":
                    step = float(parts[1])
                elif parts and parts[0] == "atom":
                    atoms.append((float(parts[1]), float(parts[2])))
                continue
            if line.startswith("t,"):
                continue
            dens.append(float(line.split(",")[1]))
        if step is None:
            raise DomainError("CSV lacks a '# step' line")
        return cls(atoms=tuple(atoms), origin=origin or 0.0, step=step, density=np.array(dens))


# ---------------------------------------------------------------------------
# combination and alignment
# ---------------------------------------------------------------------------


def _common_lattice(measures: Sequence[GridMeasure]):
    """(origin, step, n) covering every density window, or None if lattices differ."""
    dense = [m for m in measures if m.n > 0]
    if not dense:
        return None
    step = min(m.step for m in dense)
    ref = min(dense, key=lambda m: m.origin)
    if not all(m.on_lattice(ref.origin, step) for m in dense):
        return ref.origin, step, None
    hi = max(m.end for m in dense)
    n = int(round((hi - ref.origin) / step)) + 1
    return ref.origin, step, n


def combine(measures: Sequence[GridMeasure]) -> GridMeasure:
    """Sum of measures; densities on different lattices are deposited onto the finest."""
    atoms = [a for m in measures for a in m.atoms]
    lattice = _common_lattice(measures)
    if lattice is None:
        step = measures[0].step if measures else 1e-3
        return GridMeasure(atoms=atoms, origin=measures[0].origin if measures else 0.0, step=step)
    origin, step, n = lattice
    if n is None:
        lo = min(m.origin for m in measures if m.n)
        hi = max(m.end for m in measures if m.n)
        n = int(np.ceil((hi - lo) / step - _LATTICE_TOL)) + 2
        if n > MAX_POINTS:
            raise WindowError(f"combined window of {n} points exceeds the limit {MAX_POINTS}")
        W = np.zeros(n)
        for m in measures:
            if m.n:
                if m.on_lattice(lo, step):
                    W += m.embed(lo, n).weights()
                else:
                    W += m.with_atoms(()).resample(step, lo).deposit(lo, step, n).weights()
        return GridMeasure.from_weights(lo, step, W, atoms)
    if n > MAX_POINTS:
        raise WindowError(f"combined window of {n} points exceeds the limit {MAX_POINTS}")
    W = np.zeros(n)
    for m in measures:
        if m.n:
            W += m.with_atoms(()).embed(origin, n).weights()
    return GridMeasure.from_weights(origin, step, W, atoms)


def tv_distance(mu: GridMeasure, nu: GridMeasure) -> float:
    """Total variation norm of mu - nu."""
    return (mu - nu).tv_norm()


def pair(mu: GridMeasure, f: Callable) -> float:
    """<f, mu>: atoms exactly, density by the trapezoid rule."""
    total = 0.0
    if mu.atoms:
        total += float(np.sum(np.asarray(f(mu.atom_positions()), dtype=float) * mu.atom_masses()))
    if mu.n:
        total += float(np.sum(np.asarray(f(mu.grid), dtype=float) * mu.weights()))
    return total


def fourier_stieltjes(mu: GridMeasure, lam):
    """int e^{-i lam t} dmu(t); ``lam`` may be a scalar or an array."""
    scalar = np.ndim(lam) == 0
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    out = np.zeros(len(lam), dtype=complex)
    if mu.atoms:
        out += np.exp(-1j * np.outer(lam, mu.atom_positions())) @ mu.atom_masses()
    if mu.n:
        # factor the origin out to keep phases small
        W = mu.weights()
        s = mu.step * np.arange(mu.n)
        for k, lk in enumerate(lam):
            out[k] += np.exp(-1j * lk * mu.origin) * np.sum(W * np.exp(-1j * lk * s))
    return complex(out[0]) if scalar else out


def exp_weight(mu: GridMeasure, rho: float) -> GridMeasure:
    """Multiply by e^{-rho t}."""
    if rho == 0:
        return mu
    return GridMeasure(
        atoms=tuple((p, m * np.exp(-rho * p)) for p, m in mu.atoms),
        origin=mu.origin,
        step=mu.step,
        density=mu.density * np.exp(-rho * mu.grid),
    )


def convolve_R(mu: GridMeasure, nu: GridMeasure, max_points: int = MAX_POINTS) -> GridMeasure:
    """Convolution on the real line.

    atom*atom is an atom, atom*density a shifted density and density*density
    the discrete convolution of cell weights (grids are first brought to the
    finer of the two steps).
    """
    atoms = [(p + q, m * n) for p, m in mu.atoms for q, n in nu.atoms]
    parts: list[GridMeasure] = [GridMeasure(atoms=atoms, origin=0.0, step=min(mu.step, nu.step))]
    for a, m in mu.atoms:
        if nu.n:
            parts.append(nu.with_atoms(()).scale(m).shift(a))
    for a, m in nu.atoms:
        if mu.n:
            parts.append(mu.with_atoms(()).scale(m).shift(a))
    if mu.n and nu.n:
        step = min(mu.step, nu.step)
        m1 = mu.with_atoms(())
        m2 = nu.with_atoms(())
        if abs(m1.step - step) > _LATTICE_TOL * step:
            m1 = m1.resample(step)
        if abs(m2.step - step) > _LATTICE_TOL * step:
            m2 = m2.resample(step)
        n = m1.n + m2.n - 1
        if n > max_points:
            raise WindowError(f"convolution window of {n} points exceeds the limit {max_points}")
        W = signal.convolve(m1.weights(), m2.weights(), method="auto")
        parts.append(GridMeasure.from_weights(m1.origin + m2.origin, step, W))
    return combine(parts)


def neumann_inverse(
    u: GridMeasure,
    target: GridMeasure,
    tol: float = 1e-9,
    max_terms: int = 500,
) -> GridMeasure:
    """(delta_0 - u/2)^{-1} * target via the geometric series sum_k (u/2)^{*k} * target.

    Terms are added until ``(|u|/2)^{k+1}/(1 - |u|/2) * |target| < tol``.
    Each term is trimmed by a small fraction of ``tol`` to keep windows short.
    """
    r = u.tv_norm() / 2
    if r >= 1:
        raise InvertibilityError(f"|u|/2 = {r:.6g} >= 1; the Neumann series does not converge")
    half = u.scale(0.5)
    norm_t = target.tv_norm()
    total_parts = [target]
    term = target
    k = 0
    trim_eps = tol * (1 - r) / 8
    while r ** (k + 1) / (1 - r) * norm_t >= tol:
        if k >= max_terms:
            raise InvertibilityError(f"series needs more than {max_terms} terms (|u|/2 = {r:.6g})")
        term = convolve_R(half, term).trim(trim_eps)
        total_parts.append(term)
        k += 1
    log.debug("neumann_inverse: %d terms, ratio %.4g", k, r)
    return combine(total_parts)


def smooth_weights(W: np.ndarray) -> np.ndarray:
    """[1/4, 1/2, 1/4] filter with reflecting ends; keeps the sum and the support."""
    if len(W) < 3:
        return W.copy()
    P = np.concatenate([[W[0]], W, [W[-1]]])
    return 0.25 * P[:-2] + 0.5 * P[1:-1] + 0.25 * P[2:]
