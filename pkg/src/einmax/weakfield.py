"""Weak-field generation of a metric perturbation by an electromagnetic source on Minkowski space.

Pipeline, all with second-order centred differences and leapfrog time stepping:

    smooth conormal current Jbar on a surface patch Y
      -> charge density J0 completing discrete conservation
      -> potential: (d_t^2 - Lap) phi_b = h_ba J^a, zero past data
      -> stress Hhat_ab = -2 (h^cc F_ac F_bc - 1/4 h_ab Tr(F F)), F = d phi
      -> metric correction: (d_t^2 - Lap) g1 = -(Hhat + (J^a phi_a) h)

Fields are exposed as :class:`GridField` objects that can either hold stored
slices or produce them on demand, in step order, from upstream fields.  A
96^3 run therefore never keeps more than a few time levels in memory.

Each produced slice comes with a boolean support mask that is an a-priori
superset of its nonzero set, derived only from the source geometry and the
stencil footprint.  Comparing values against this mask is the causality check.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.special import beta as beta_fn

from . import kernels
from .errors import CFLViolation, GeometryError, NumericalAbort

__all__ = [
    "GridSpec",
    "GridField",
    "ConormalSourceSpec",
    "SYM_INDEX",
    "STABILITY_LIMIT",
    "build_conormal_source",
    "complete_current",
    "potential_source",
    "wave_solve",
    "em_stress",
    "metric_correction",
    "lightcone_energy_diag",
    "gauge_residual",
    "causality_leak",
    "simulate",
    "contact_time",
    "separation_time",
    "default_tube_halfwidth",
    "refinement_study",
    "manufactured_convergence",
    "write_slice_csv",
    "write_pgm",
]

SYM_INDEX = kernels.SYM_INDEX
STABILITY_LIMIT = 1.0 / math.sqrt(3.0)
_ETA = np.array([-1.0, 1.0, 1.0, 1.0])
# h_ab in symmetric storage order
_ETA_SYM = np.array([-1.0, 0, 0, 0, 1.0, 0, 0, 1.0, 0, 1.0])


# -- grid ---------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Uniform node grid, boundary nodes included, with zero Dirichlet data on the boundary."""

    n: tuple
    extent: tuple
    origin: tuple
    dt: float
    steps: int

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        object.__setattr__(self, "extent", tuple(float(v) for v in self.extent))
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "steps", int(self.steps))
        self.validate()

    @classmethod
    def cube(cls, n: int, length: float = 2.0, steps: int | None = None, cfl: float = 0.5,
             centered: bool = True, t_final: float | None = None) -> "GridSpec":
        h = length / (n - 1)
        dt = cfl * h
        if t_final is not None:
            steps = max(1, int(math.ceil(t_final / dt - 1e-9)))
            dt = t_final / steps
        elif steps is None:
            steps = 2 * n
        origin = (-length / 2,) * 3 if centered else (0.0,) * 3
        return cls((n, n, n), (length,) * 3, origin, dt, steps)

    def validate(self) -> None:
        if len(self.n) != 3 or min(self.n) < 3:
            raise GeometryError("grid needs at least 3 nodes per axis")
        if min(self.extent) <= 0:
            raise GeometryError("grid extent must be positive")
        if self.dt <= 0 or self.steps < 1:
            raise GeometryError("time step and step count must be positive")
        if self.dt > STABILITY_LIMIT * min(self.h) * (1 + 1e-12):
            raise CFLViolation(
                f"dt = {self.dt:.6g} exceeds the leapfrog limit h/sqrt(3) = {STABILITY_LIMIT * min(self.h):.6g}"
            )

    @property
    def h(self) -> tuple:
        return tuple(L / (n - 1) for L, n in zip(self.extent, self.n))

    @property
    def cfl(self) -> float:
        return self.dt / min(self.h)

    @property
    def shape(self) -> tuple:
        return self.n

    def time(self, step: int) -> float:
        return step * self.dt

    def axes(self) -> list:
        return [o + h * np.arange(n) for o, h, n in zip(self.origin, self.h, self.n)]

    def mesh(self) -> tuple:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def to_json(self) -> dict:
        return {"n": list(self.n), "extent": list(self.extent), "origin": list(self.origin),
                "dt": self.dt, "steps": self.steps, "h": list(self.h), "cfl": self.cfl}


def _dilate(mask: np.ndarray) -> np.ndarray:
    """Grow a mask by the 7-point stencil footprint."""
    out = mask.copy()
    out[1:] |= mask[:-1]
    out[:-1] |= mask[1:]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    out[:, :, 1:] |= mask[:, :, :-1]
    out[:, :, :-1] |= mask[:, :, 1:]
    return out


# -- fields -------------------------------------------------------------------


class GridField:
    """Sequence of slices of shape (ncomp, nx, ny, nz), one per time step.

    A field is either stored (``slices`` given) or streamed from ``factory``,
    a zero-argument callable returning an iterator of ``(array, mask)`` pairs
    for steps 0, 1, 2, ...  Streamed fields keep the last ``window`` steps;
    stepping backwards past the window restarts the stream.
    """

    def __init__(self, grid: GridSpec, ncomp: int, *, factory: Callable[[], Iterator] | None = None,
                 slices: dict | None = None, supports: dict | None = None, window: int = 4, name: str = ""):
        if (factory is None) == (slices is None):
            raise ValueError("give exactly one of factory or slices")
        self.grid = grid
        self.ncomp = ncomp
        self.name = name
        self.window = window
        self._factory = factory
        self._stored = None if slices is None else dict(slices)
        self._stored_support = None if supports is None else dict(supports)
        self._iter = None
        self._next = 0
        self._cache: dict = {}

    @property
    def kind(self) -> str:
        return {1: "scalar", 3: "spatial", 4: "covector", 10: "symmetric"}.get(self.ncomp, "general")

    def zeros(self) -> np.ndarray:
        return np.zeros((self.ncomp,) + self.grid.shape)

    def _advance_to(self, n: int) -> None:
        if self._iter is None or n < self._next - self.window:
            self._iter = iter(self._factory())
            self._next = 0
            self._cache = {}
        while self._next <= n:
            arr, mask = next(self._iter)
            self._cache[self._next] = (arr, mask)
            self._cache.pop(self._next - self.window, None)
            self._next += 1

    def _get(self, n: int):
        if self._stored is not None:
            arr = self._stored.get(n)
            if arr is None:
                raise KeyError(f"step {n} not stored in field {self.name!r}")
            mask = None if self._stored_support is None else self._stored_support.get(n)
            return arr, mask
        if n not in self._cache:
            self._advance_to(n)
        return self._cache[n]

    def at(self, n: int) -> np.ndarray:
        if n < 0:
            return self.zeros()
        return self._get(n)[0]

    def support(self, n: int) -> np.ndarray:
        """A-priori superset of the nonzero set at step ``n`` (all True when unknown)."""
        if n < 0:
            return np.zeros(self.grid.shape, dtype=bool)
        mask = self._get(n)[1]
        return np.ones(self.grid.shape, dtype=bool) if mask is None else mask

    def stored_steps(self) -> list:
        return sorted(self._stored) if self._stored is not None else []

    def materialize(self, steps: Sequence[int] | None = None) -> "GridField":
        steps = range(self.grid.steps + 1) if steps is None else steps
        slices, supports = {}, {}
        for n in steps:
            arr, mask = self._get(n)
            slices[n] = arr
            supports[n] = mask
        return GridField(self.grid, self.ncomp, slices=slices, supports=supports, name=self.name)

    def scaled(self, lam: float) -> "GridField":
        def gen():
            n = 0
            while True:
                yield lam * self.at(n), self.support(n)
                n += 1
        return GridField(self.grid, self.ncomp, factory=gen, name=f"{lam}*{self.name}")

    @classmethod
    def from_function(cls, grid: GridSpec, ncomp: int, fn: Callable[[int], np.ndarray],
                      support_fn: Callable[[int], np.ndarray] | None = None, name: str = "") -> "GridField":
        def gen():
            n = 0
            while True:
                yield fn(n), (None if support_fn is None else support_fn(n))
                n += 1
        return cls(grid, ncomp, factory=gen, name=name)


def _check_finite(arr: np.ndarray, what: str, n: int) -> None:
    if not np.isfinite(arr).all():
        raise NumericalAbort(f"non-finite values in {what} at step {n}")


# -- source -------------------------------------------------------------------


@dataclass(frozen=True)
class ConormalSourceSpec:
    """Smooth stand-in for a current conormal to a planar patch Y at t = 0.

    The profile is ``(1 - (d/w)^2)^k`` in the normal distance ``d``, normalised
    to unit integral across the patch, times the same bump in each tangential
    coordinate, times a temporal window.  The default window is the derivative
    of a bump, so the current carries no net charge once it switches off.
    """

    base: tuple = (0.0, 0.0, 0.0)
    dir1: tuple = (1.0, 0.0, 0.0)
    dir2: tuple = (0.0, 1.0, 0.0)
    extents: tuple = (0.4, 0.4)
    width: float | None = None
    amplitude: tuple = (1.0, 0.0, 0.0)
    duration: float | None = None
    t_on: float | None = None
    smoothness: int = 4
    window: str = "dipole"

    def frame(self) -> tuple:
        e1 = np.asarray(self.dir1, dtype=float)
        e2 = np.asarray(self.dir2, dtype=float)
        if np.linalg.norm(e1) == 0:
            raise GeometryError("patch direction 1 is zero")
        e1 = e1 / np.linalg.norm(e1)
        e2 = e2 - (e2 @ e1) * e1
        if np.linalg.norm(e2) < 1e-12:
            raise GeometryError("patch directions are parallel")
        e2 = e2 / np.linalg.norm(e2)
        return e1, e2, np.cross(e1, e2)

    def resolved(self, grid: GridSpec) -> "ConormalSourceSpec":
        """Fill in defaults that depend on the grid."""
        w = self.width if self.width is not None else 3.0 * min(grid.h)
        T = self.duration if self.duration is not None else 2.0 * w
        t_on = self.t_on if self.t_on is not None else 2.0 * grid.dt
        return replace(self, width=float(w), duration=float(T), t_on=float(t_on))

    @property
    def t_center(self) -> float:
        return self.t_on + 0.5 * self.duration

    @property
    def t_off(self) -> float:
        return self.t_on + self.duration

    def patch_coords(self, X, Y, Z) -> tuple:
        e1, e2, nrm = self.frame()
        d = (X - self.base[0], Y - self.base[1], Z - self.base[2])
        s1 = d[0] * e1[0] + d[1] * e1[1] + d[2] * e1[2]
        s2 = d[0] * e2[0] + d[1] * e2[1] + d[2] * e2[2]
        sn = d[0] * nrm[0] + d[1] * nrm[1] + d[2] * nrm[2]
        return s1, s2, sn

    def distance_to_patch(self, X, Y, Z) -> np.ndarray:
        s1, s2, sn = self.patch_coords(X, Y, Z)
        a1, a2 = self.extents
        return np.sqrt(np.maximum(np.abs(s1) - a1, 0) ** 2 + np.maximum(np.abs(s2) - a2, 0) ** 2 + sn ** 2)

    def spatial_profile(self, X, Y, Z) -> np.ndarray:
        k = self.smoothness
        w = self.width
        s1, s2, sn = self.patch_coords(X, Y, Z)
        a1, a2 = self.extents
        norm = 1.0 / (w * beta_fn(0.5, k + 1))
        bump = lambda r: np.where(np.abs(r) < 1.0, np.clip(1.0 - r * r, 0.0, None) ** k, 0.0)  # noqa: E731
        return norm * bump(sn / w) * bump(s1 / a1) * bump(s2 / a2)

    def temporal(self, t: float) -> float:
        k = self.smoothness
        tau = (t - self.t_center) / (0.5 * self.duration)
        if abs(tau) >= 1.0:
            return 0.0
        if self.window == "bump":
            return (1.0 - tau * tau) ** k
        if self.window == "dipole":
            return -2.0 * k * tau * (1.0 - tau * tau) ** (k - 1)
        if self.window == "step":
            return 1.0
        raise ValueError(f"unknown window {self.window!r}")

    def reach(self) -> float:
        """Radius of a ball around the base point containing the source support."""
        return math.hypot(self.extents[0], self.extents[1], self.width)

    def to_json(self) -> dict:
        return {"base": list(self.base), "dir1": list(self.dir1), "dir2": list(self.dir2),
                "extents": list(self.extents), "width": self.width, "amplitude": list(self.amplitude),
                "duration": self.duration, "t_on": self.t_on, "smoothness": self.smoothness,
                "window": self.window}

    @classmethod
    def from_json(cls, obj: dict) -> "ConormalSourceSpec":
        allowed = set(cls.__dataclass_fields__)
        unknown = set(obj) - allowed
        if unknown:
            raise ValueError(f"unknown source fields {sorted(unknown)}")
        kw = {}
        for key, val in obj.items():
            kw[key] = tuple(val) if isinstance(val, list) else val
        return cls(**kw)


def _check_source_in_grid(spec: ConormalSourceSpec, grid: GridSpec, profile: np.ndarray) -> None:
    X = grid.axes()
    lo = np.array([x[0] for x in X])
    hi = np.array([x[-1] for x in X])
    base = np.asarray(spec.base, dtype=float)
    if np.any(base <= lo) or np.any(base >= hi):
        raise GeometryError("patch base point lies outside the grid")
    edge = np.zeros(grid.shape, dtype=bool)
    edge[[0, 1, -2, -1]] = True
    edge[:, [0, 1, -2, -1]] = True
    edge[:, :, [0, 1, -2, -1]] = True
    if np.any(profile[edge] != 0):
        raise GeometryError("source support reaches the grid boundary")


def build_conormal_source(spec: ConormalSourceSpec, grid: GridSpec) -> GridField:
    """Spatial current Jbar^i (3 components) as a streamed field."""
    spec = spec.resolved(grid)
    profile = spec.spatial_profile(*grid.mesh())
    _check_source_in_grid(spec, grid, profile)
    amp = np.asarray(spec.amplitude, dtype=float).reshape(3, 1, 1, 1)
    spatial_mask = profile != 0
    empty = np.zeros(grid.shape, dtype=bool)
    base = amp * profile

    def fn(n):
        chi = spec.temporal(grid.time(n))
        return base * chi if chi != 0.0 else np.zeros((3,) + grid.shape)

    def support(n):
        return spatial_mask if spec.temporal(grid.time(n)) != 0.0 and np.any(amp) else empty

    f = GridField.from_function(grid, 3, fn, support, name="Jbar")
    f.spec = spec
    f.profile = profile
    return f


def _divergence(v: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Centred divergence of a 3-component field on interior nodes (zero on the boundary)."""
    out = np.zeros(grid.shape)
    hx, hy, hz = grid.h
    c = (slice(1, -1),) * 3
    out[c] = ((v[0, 2:, 1:-1, 1:-1] - v[0, :-2, 1:-1, 1:-1]) / (2 * hx)
              + (v[1, 1:-1, 2:, 1:-1] - v[1, 1:-1, :-2, 1:-1]) / (2 * hy)
              + (v[2, 1:-1, 1:-1, 2:] - v[2, 1:-1, 1:-1, :-2]) / (2 * hz))
    return out


def complete_current(Jbar: GridField, grid: GridSpec) -> GridField:
    """Charge density J0 with d_t J0 + div Jbar = 0 in centred discrete form.

    J0^{n+1} = J0^{n-1} - 2 dt div Jbar^n, started from J0^0 = 0 and a trapezoidal
    first step, so the centred continuity residual vanishes to round-off once
    the current has been off for the first two steps.
    """
    dt = grid.dt

    def gen():
        prev = np.zeros((1,) + grid.shape)
        m_prev = np.zeros(grid.shape, dtype=bool)
        yield prev, m_prev
        d0, d1 = _divergence(Jbar.at(0), grid), _divergence(Jbar.at(1), grid)
        cur = (-0.5 * dt * (d0 + d1))[None]
        m_cur = _dilate(Jbar.support(0) | Jbar.support(1))
        yield cur, m_cur
        n = 1
        while True:
            nxt = prev - 2.0 * dt * _divergence(Jbar.at(n), grid)[None]
            m_nxt = m_prev | _dilate(Jbar.support(n))
            _check_finite(nxt, "charge density", n + 1)
            yield nxt, m_nxt
            prev, cur = cur, nxt
            m_prev, m_cur = m_cur, m_nxt
            n += 1

    return GridField(grid, 1, factory=gen, name="J0")


def current_field(J0: GridField, Jbar: GridField) -> GridField:
    """Contravariant four-current (J0, Jbar)."""
    grid = J0.grid

    def gen():
        n = 0
        while True:
            yield np.concatenate([J0.at(n), Jbar.at(n)]), J0.support(n) | Jbar.support(n)
            n += 1

    return GridField(grid, 4, factory=gen, name="J")


def potential_source(J: GridField) -> GridField:
    """Index-lowered current h_ba J^a = (-J0, J1, J2, J3)."""
    def gen():
        n = 0
        while True:
            yield J.at(n) * _ETA.reshape(4, 1, 1, 1), J.support(n)
            n += 1

    return GridField(J.grid, 4, factory=gen, name="h.J")


def wave_solve(source: GridField, grid: GridSpec, kernel=None) -> GridField:
    """Causal solution of (d_t^2 - Lap) u = source with zero past data, componentwise."""
    grid.validate()
    kern = kernel or kernels
    hx, hy, hz = grid.h
    dt = grid.dt
    cx, cy, cz = (dt / hx) ** 2, (dt / hy) ** 2, (dt / hz) ** 2
    dt2 = dt * dt
    nc = source.ncomp

    def gen():
        u_prev = np.zeros((nc,) + grid.shape)
        m_prev = np.zeros(grid.shape, dtype=bool)
        yield u_prev, m_prev
        f0 = source.at(0)
        u_cur = 0.5 * dt2 * f0
        kernels._kernels_py._zero_boundary(u_cur)
        m_cur = source.support(0).copy()
        yield u_cur, m_cur
        n = 1
        while True:
            f = np.ascontiguousarray(source.at(n))
            u_next = np.empty_like(u_cur)
            kern.leapfrog_step(u_prev, u_cur, f, u_next, cx, cy, cz, dt2)
            _check_finite(u_next, f"wave solution {source.name!r}", n + 1)
            m_next = _dilate(m_cur) | m_prev | source.support(n)
            yield u_next, m_next
            u_prev, u_cur = u_cur, u_next
            m_prev, m_cur = m_cur, m_next
            n += 1

    return GridField(grid, nc, factory=gen, name=f"Q[{source.name}]")


def em_stress(phi_dot: GridField, grid: GridSpec, kernel=None) -> GridField:
    """Quadratic stress of F = d phi_dot in symmetric storage order (10 components)."""
    kern = kernel or kernels
    inv2dt = 1.0 / (2.0 * grid.dt)
    inv2h = np.array([1.0 / (2.0 * h) for h in grid.h])

    def gen():
        n = 0
        while True:
            a, b, c = (np.ascontiguousarray(phi_dot.at(m)) for m in (n - 1, n, n + 1))
            out = kern.em_stress(a, b, c, inv2dt, inv2h)
            mask = _dilate(phi_dot.support(n)) | phi_dot.support(n - 1) | phi_dot.support(n + 1)
            yield out, mask
            n += 1

    return GridField(grid, 10, factory=gen, name="H2")


def _metric_source(stress: GridField, phi_dot: GridField, J: GridField) -> GridField:
    eta = _ETA_SYM.reshape(10, 1, 1, 1)

    def gen():
        n = 0
        while True:
            contraction = np.einsum("a...,a...->...", J.at(n), phi_dot.at(n))
            src = stress.at(n) + contraction[None] * eta
            np.negative(src, out=src)
            yield src, stress.support(n) | (J.support(n) & phi_dot.support(n))
            n += 1

    return GridField(stress.grid, 10, factory=gen, name="-(H2+Jphi h)")


def metric_correction(phi_dot: GridField, J: GridField, grid: GridSpec, kernel=None,
                      stress: GridField | None = None) -> GridField:
    """g1 solving (d_t^2 - Lap) g1 = -(Hhat + (J^a phi_a) h) with zero past data."""
    stress = stress if stress is not None else em_stress(phi_dot, grid, kernel)
    return wave_solve(_metric_source(stress, phi_dot, J), grid, kernel)


# -- diagnostics --------------------------------------------------------------


def _second_difference_energy(u: np.ndarray, grid: GridSpec) -> np.ndarray:
    hx, hy, hz = grid.h
    c = (slice(None),) + (slice(1, -1),) * 3
    e = np.zeros(grid.shape)
    core = u[c]
    acc = ((u[:, 2:, 1:-1, 1:-1] - 2 * core + u[:, :-2, 1:-1, 1:-1]) / hx ** 2) ** 2
    acc += ((u[:, 1:-1, 2:, 1:-1] - 2 * core + u[:, 1:-1, :-2, 1:-1]) / hy ** 2) ** 2
    acc += ((u[:, 1:-1, 1:-1, 2:] - 2 * core + u[:, 1:-1, 1:-1, :-2]) / hz ** 2) ** 2
    e[1:-1, 1:-1, 1:-1] = acc.sum(axis=0)
    return e


def _gradient_energy(u: np.ndarray, grid: GridSpec) -> np.ndarray:
    hx, hy, hz = grid.h
    e = np.zeros(grid.shape)
    acc = ((u[:, 2:, 1:-1, 1:-1] - u[:, :-2, 1:-1, 1:-1]) / (2 * hx)) ** 2
    acc += ((u[:, 1:-1, 2:, 1:-1] - u[:, 1:-1, :-2, 1:-1]) / (2 * hy)) ** 2
    acc += ((u[:, 1:-1, 1:-1, 2:] - u[:, 1:-1, 1:-1, :-2]) / (2 * hz)) ** 2
    e[1:-1, 1:-1, 1:-1] = acc.sum(axis=0)
    return e


def lightcone_energy_diag(field: GridField | np.ndarray, Yspec: ConormalSourceSpec, grid: GridSpec,
                          step: int | None = None, energy: str = "curvature",
                          tube_halfwidth: float | None = None) -> dict:
    """Fraction of the field's high-frequency energy within a tube around the null front from Y.

    The front at time t is the set of points at distance t - t_c from the patch,
    where t_c is the centre of the source window.  ``energy='curvature'`` uses
    squared second differences (insensitive to the smooth wake behind the front);
    ``energy='gradient'`` uses squared first differences.
    """
    spec = Yspec.resolved(grid)
    step = grid.steps if step is None else step
    u = field.at(step) if isinstance(field, GridField) else np.asarray(field)
    if u.ndim == 3:
        u = u[None]
    hw = tube_halfwidth if tube_halfwidth is not None else max(2.0 * spec.width, 4.0 * min(grid.h))
    t = grid.time(step)
    radius = t - spec.t_center
    dist = spec.distance_to_patch(*grid.mesh())
    tube = np.abs(dist - radius) <= hw
    e = _second_difference_energy(u, grid) if energy == "curvature" else _gradient_energy(u, grid)
    total = float(e.sum())
    inside = float(e[tube].sum())
    ratio = 1.0 if total == 0.0 else inside / total
    return {"ratio": ratio, "inside": inside, "total": total, "time": t, "step": step,
            "front_radius": radius, "tube_halfwidth": hw, "energy": energy}


def gauge_residual(phi_dot: GridField, grid: GridSpec, steps: Sequence[int] | None = None) -> dict:
    """Max-norm of the discrete Lorentz-gauge quantity -d_t phi_0 + div(phi_spatial).

    Reported both absolutely and relative to the largest first difference of
    phi_dot seen over the same steps.
    """
    steps = range(1, grid.steps) if steps is None else steps
    hx, hy, hz = grid.h
    c = (slice(2, -2),) * 3
    worst, scale = 0.0, 0.0
    for n in steps:
        pm, p0, pp = phi_dot.at(n - 1), phi_dot.at(n), phi_dot.at(n + 1)
        dt0 = (pp[0] - pm[0]) / (2 * grid.dt)
        div = _divergence(p0[1:4], grid)
        r = -dt0 + div
        worst = max(worst, float(np.abs(r[c]).max()))
        scale = max(scale, float(np.abs(dt0).max()), float(np.abs(div).max()))
    rel = 0.0 if scale == 0.0 else worst / scale
    return {"max_abs": worst, "max_rel": rel, "scale": scale}


def causality_leak(field: GridField, step: int) -> float:
    """max |field| outside its a-priori support, relative to max |field| (0 for a zero field)."""
    u = field.at(step)
    top = float(np.abs(u).max())
    if top == 0.0:
        return 0.0
    outside = ~field.support(step)
    if not outside.any():
        return 0.0
    return float(np.abs(u[:, outside]).max()) / top


# -- driver -------------------------------------------------------------------


def contact_time(spec: ConormalSourceSpec, grid: GridSpec) -> float:
    """Time at which the physical light cone of the source support comes within two cells of the boundary."""
    spec = spec.resolved(grid)
    axes = grid.axes()
    mask = spec.spatial_profile(*grid.mesh()) != 0
    idx = np.nonzero(mask)
    margin = np.inf
    for ax, ii in enumerate(idx):
        coord = axes[ax]
        margin = min(margin, coord[ii.min()] - coord[0], coord[-1] - coord[ii.max()])
    return spec.t_on + margin - 2.0 * max(grid.h)


def default_tube_halfwidth(spec: ConormalSourceSpec, grid: GridSpec) -> float:
    spec = spec.resolved(grid)
    return max(2.0 * spec.width, 4.0 * min(grid.h))


def separation_time(spec: ConormalSourceSpec, grid: GridSpec) -> float:
    """Earliest time at which the measurement tube clears the source support by one tube half-width.

    The front radius is then 2 * halfwidth + width, so the inner tube edge sits
    one half-width beyond the support of the source.  Measuring here keeps the
    diagnostic about localisation rather than about accumulated phase error.
    """
    spec = spec.resolved(grid)
    return spec.t_center + 2.0 * default_tube_halfwidth(spec, grid) + spec.width


def _measure_step(spec: ConormalSourceSpec, grid: GridSpec) -> int:
    """Step nearest the separation time, but never past boundary contact."""
    t = min(separation_time(spec, grid), contact_time(spec, grid))
    return int(max(1, min(grid.steps, round(t / grid.dt))))


@dataclass
class SimulationResult:
    grid: GridSpec
    spec: ConormalSourceSpec
    lam: float
    measure_step: int
    diagnostics: dict
    snapshots: dict = field(default_factory=dict)


def simulate(spec: ConormalSourceSpec, grid: GridSpec, lam: float = 1.0, measure_step: int | None = None,
             check_every: int = 4, kernel=None, keep: Sequence[str] = ("g1", "h2_00"),
             gauge: bool = True) -> SimulationResult:
    """Stream the full pipeline through ``grid.steps`` steps and collect diagnostics.

    Field values are recorded at ``measure_step`` (default: last step before
    the source's light cone reaches the boundary).
    """
    t_start = time.perf_counter()
    spec = spec.resolved(grid)
    if lam != 1.0:
        spec = replace(spec, amplitude=tuple(lam * a for a in spec.amplitude))
    Jbar = build_conormal_source(spec, grid)
    J0 = complete_current(Jbar, grid)
    J = current_field(J0, Jbar)
    phi = wave_solve(potential_source(J), grid, kernel)
    stress = em_stress(phi, grid, kernel)
    g1 = metric_correction(phi, J, grid, kernel, stress=stress)
    m_step = _measure_step(spec, grid) if measure_step is None else measure_step
    m_step = min(m_step, grid.steps)

    h00_max_ratio = -np.inf
    h00_peak = 0.0
    leak = {"phi": 0.0, "g1": 0.0, "J0": 0.0}
    gauge_worst, gauge_scale = 0.0, 0.0
    snapshots = {}
    c = (slice(2, -2),) * 3
    for n in range(grid.steps + 1):
        g = g1.at(n)
        if n % check_every == 0 or n == grid.steps or n == m_step:
            leak["g1"] = max(leak["g1"], causality_leak(g1, n))
            leak["phi"] = max(leak["phi"], causality_leak(phi, n))
            leak["J0"] = max(leak["J0"], causality_leak(J0, n))
        s00 = stress.at(n)[0]
        peak = float(np.abs(s00).max())
        if peak > 0:
            h00_peak = max(h00_peak, peak)
            h00_max_ratio = max(h00_max_ratio, float(s00.max()) / peak)
        if gauge and 1 <= n <= m_step:
            pm, p0, pp = phi.at(n - 1), phi.at(n), phi.at(n + 1)
            dt0 = (pp[0] - pm[0]) / (2 * grid.dt)
            div = _divergence(p0[1:4], grid)
            gauge_worst = max(gauge_worst, float(np.abs((div - dt0)[c]).max()))
            gauge_scale = max(gauge_scale, float(np.abs(dt0).max()), float(np.abs(div).max()))
        if n == m_step:
            snapshots["step"] = n
            if "g1" in keep:
                snapshots["g1"] = g.copy()
            if "h2_00" in keep:
                snapshots["h2_00"] = s00.copy()
            if "phi" in keep:
                snapshots["phi"] = phi.at(n).copy()
    runtime = time.perf_counter() - t_start

    g_snap = snapshots.get("g1")
    tube = lightcone_energy_diag(g_snap, spec, grid, m_step) if g_snap is not None else None
    diagnostics = {
        "backend": (kernel or kernels).BACKEND,
        "steps": grid.steps,
        "measure_step": m_step,
        "measure_time": grid.time(m_step),
        "h2_00_max_over_peak": (0.0 if h00_peak == 0.0 else h00_max_ratio),
        "h2_00_peak": h00_peak,
        "causality_leak": leak,
        "gauge_residual_abs": gauge_worst,
        "gauge_residual_rel": 0.0 if gauge_scale == 0.0 else gauge_worst / gauge_scale,
        "g1_norm": float(np.sqrt((g_snap ** 2).sum() * np.prod(grid.h))) if g_snap is not None else None,
        "g1_max": float(np.abs(g_snap).max()) if g_snap is not None else None,
        "tube": tube,
        "runtime_s": runtime,
    }
    return SimulationResult(grid, spec, lam, m_step, diagnostics, snapshots)


def refinement_study(levels: Sequence[int] = (24, 48, 96), length: float = 2.0, cfl: float = 0.5,
                     spec: ConormalSourceSpec | None = None, width_cells: float = 3.0,
                     t_measure: float | None = None, kernel=None) -> dict:
    """Tube ratio of g1 for one physical source on successively refined meshes.

    The source width is ``width_cells`` cells of the finest mesh and held fixed
    across levels, as are the measurement time (default: the separation time on
    the finest mesh) and the tube half-width, so the levels differ only in
    resolution.
    """
    spec = spec or ConormalSourceSpec()
    finest = GridSpec.cube(max(levels), length, cfl=cfl, steps=1)
    if spec.width is None:
        spec = replace(spec, width=width_cells * min(finest.h))
    if spec.t_on is None:
        spec = replace(spec, t_on=0.0)
    spec = spec.resolved(finest)
    if t_measure is None:
        t_measure = min(separation_time(spec, finest), contact_time(spec, finest))
    hw = default_tube_halfwidth(spec, finest)
    rows = []
    for n in levels:
        grid = GridSpec.cube(n, length, cfl=cfl, t_final=t_measure)
        res = simulate(spec, grid, measure_step=grid.steps, kernel=kernel, gauge=False, check_every=8)
        diag = lightcone_energy_diag(res.snapshots["g1"], spec, grid, grid.steps, tube_halfwidth=hw)
        rows.append({"n": n, "ratio": diag["ratio"], "h": min(grid.h), "steps": grid.steps,
                     "runtime_s": res.diagnostics["runtime_s"]})
    ratios = [r["ratio"] for r in rows]
    return {"levels": rows, "ratios": ratios, "monotone": all(b >= a for a, b in zip(ratios, ratios[1:])),
            "t_measure": t_measure, "width": spec.width, "tube_halfwidth": hw}


def manufactured_convergence(levels: Sequence[int] = (17, 33, 65), t_final: float = 0.5, cfl: float = 0.5,
                             kernel=None) -> dict:
    """Observed order of wave_solve on u = t^4 sin(pi x) sin(pi y) sin(pi z) over [0,1]^3."""
    rows = []
    for n in levels:
        grid = GridSpec.cube(n, 1.0, cfl=cfl, centered=False, t_final=t_final)
        X, Y, Z = grid.mesh()
        S = np.sin(np.pi * X) * np.sin(np.pi * Y) * np.sin(np.pi * Z)
        coef = 3 * np.pi ** 2

        def fn(k, S=S, grid=grid):
            t = grid.time(k)
            return ((12 * t * t + coef * t ** 4) * S)[None]

        src = GridField.from_function(grid, 1, fn, name="manufactured")
        u = wave_solve(src, grid, kernel)
        num = u.at(grid.steps)[0]
        exact = t_final ** 4 * S
        err = float(np.sqrt(((num - exact) ** 2).sum() * np.prod(grid.h)))
        rows.append({"n": n, "h": grid.h[0], "dt": grid.dt, "steps": grid.steps, "l2_error": err})
    orders = [math.log(a["l2_error"] / b["l2_error"]) / math.log(a["h"] / b["h"]) for a, b in zip(rows, rows[1:])]
    return {"levels": rows, "orders": orders}


# -- output -------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_slice_csv(path, grid: GridSpec, columns: dict, axis: int = 1, index: int | None = None) -> None:
    """Write named scalar fields on the plane ``axis = index`` (default: central plane)."""
    index = grid.n[axis] // 2 if index is None else index
    axes = grid.axes()
    keep = [a for a in range(3) if a != axis]
    names = list(columns)
    planes = [np.take(np.asarray(columns[k]), index, axis=axis) for k in names]
    lines = [",".join(["i", "j", f"x{keep[0]}", f"x{keep[1]}"] + names)]
    for i in range(grid.n[keep[0]]):
        for j in range(grid.n[keep[1]]):
            vals = [_fmt(p[i, j]) for p in planes]
            lines.append(",".join([str(i), str(j), _fmt(axes[keep[0]][i]), _fmt(axes[keep[1]][j])] + vals))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_pgm(path, image: np.ndarray) -> None:
    """8-bit binary PGM, linearly scaled from 0 to max |image|."""
    a = np.abs(np.asarray(image, dtype=float))
    top = a.max()
    scaled = np.zeros(a.shape, dtype=np.uint8) if top == 0 else np.round(255.0 * a / top).astype(np.uint8)
    h, w = scaled.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(scaled.tobytes())
