"""Causal geometry of metrics of the form g = -beta(t, y) dt^2 + kappa(t, y).

Geodesics are integrated with scipy's DOP853 on the first-order system
(x, x').  Conjugate points come from three Jacobi fields obtained by
integrating the linearised geodesic equation alongside the curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .errors import ChartError, GeometryError, NumericalAbort

__all__ = [
    "WarpedMetric",
    "GeodesicCurve",
    "ObserverRegion",
    "ObservationSample",
    "ObservationSet",
    "FermiChart",
    "minkowski",
    "round_sphere",
    "perturbed_flat",
    "metric_from_json",
    "geodesic_trace",
    "geodesic_fan",
    "first_conjugate_time",
    "fermi_chart",
    "observation_set",
    "earliest_observation_set",
    "sphere_directions",
    "null_direction",
    "hausdorff_distance",
    "write_observation_csv",
]

_FD_STEP = 1e-6


# -- metrics ------------------------------------------------------------------


class WarpedMetric:
    """Lorentzian metric -beta dt^2 + kappa on coordinates x = (t, y1, y2, y3).

    ``beta(X)`` returns shape (...), ``kappa(X)`` shape (..., 3, 3) for points
    X of shape (..., 4).  Optional ``dbeta`` (..., 4) and ``dkappa``
    (..., 4, 3, 3) give derivatives in each coordinate; missing ones fall back
    to central differences.  ``chart_margin(X)`` is positive inside the
    coordinate chart.
    """

    def __init__(self, beta: Callable, kappa: Callable, dbeta: Callable | None = None,
                 dkappa: Callable | None = None, chart_margin: Callable | None = None,
                 name: str = "custom", params: dict | None = None, d2beta: Callable | None = None,
                 d2kappa: Callable | None = None):
        self._beta = beta
        self._kappa = kappa
        self._dbeta = dbeta
        self._dkappa = dkappa
        self._d2beta = d2beta
        self._d2kappa = d2kappa
        self._margin = chart_margin
        self.name = name
        self.params = dict(params or {})

    # components
    def beta(self, X):
        return np.asarray(self._beta(np.asarray(X, dtype=float)), dtype=float)

    def kappa(self, X):
        return np.asarray(self._kappa(np.asarray(X, dtype=float)), dtype=float)

    def chart_margin(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self._margin is None:
            return np.full(X.shape[:-1], np.inf)
        return np.asarray(self._margin(X), dtype=float)

    def in_chart(self, X) -> np.ndarray:
        return self.chart_margin(X) > 0

    def g(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[:-1] + (4, 4))
        out[..., 0, 0] = -self.beta(X)
        out[..., 1:, 1:] = self.kappa(X)
        return out

    def g_inv(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[:-1] + (4, 4))
        out[..., 0, 0] = -1.0 / self.beta(X)
        out[..., 1:, 1:] = np.linalg.inv(self.kappa(X))
        return out

    def _fd(self, fn, X, step=_FD_STEP):
        X = np.asarray(X, dtype=float)
        parts = []
        for c in range(4):
            e = np.zeros(4)
            e[c] = step
            parts.append((fn(X + e) - fn(X - e)) / (2 * step))
        return np.stack(parts, axis=X.ndim - 1)

    def dg(self, X) -> np.ndarray:
        """dg[..., c, a, b] = d_c g_ab."""
        X = np.asarray(X, dtype=float)
        db = self._dbeta(X) if self._dbeta is not None else self._fd(self.beta, X)
        dk = self._dkappa(X) if self._dkappa is not None else self._fd(self.kappa, X)
        out = np.zeros(X.shape[:-1] + (4, 4, 4))
        out[..., :, 0, 0] = -np.asarray(db)
        out[..., :, 1:, 1:] = dk
        return out

    def christoffel(self, X) -> np.ndarray:
        """Gamma[..., m, a, b] = 1/2 g^{ml} (d_a g_lb + d_b g_la - d_l g_ab)."""
        dg = self.dg(X)
        gi = self.g_inv(X)
        # T[l, a, b]
        T = np.swapaxes(dg, -3, -2) + np.moveaxis(np.swapaxes(dg, -3, -2), -1, -2) - dg
        return 0.5 * np.einsum("...ml,...lab->...mab", gi, T)

    def d2g(self, X) -> np.ndarray:
        """d2g[..., c, d, a, b] = d_c d_d g_ab."""
        X = np.asarray(X, dtype=float)
        if self._d2beta is None or self._d2kappa is None:
            # differencing a differenced quantity: a larger step balances truncation and roundoff
            return self._fd(self.dg, X, step=1e-4)
        out = np.zeros(X.shape[:-1] + (4, 4, 4, 4))
        out[..., :, :, 0, 0] = -np.asarray(self._d2beta(X))
        out[..., :, :, 1:, 1:] = self._d2kappa(X)
        return out

    def christoffel_derivative(self, X) -> np.ndarray:
        """dGamma[..., c, m, a, b] = d_c Gamma^m_ab."""
        X = np.asarray(X, dtype=float)
        dg = self.dg(X)
        d2 = self.d2g(X)
        gi = self.g_inv(X)
        T = np.swapaxes(dg, -3, -2) + np.moveaxis(np.swapaxes(dg, -3, -2), -1, -2) - dg
        # d_c T_lab = d_c d_a g_lb + d_c d_b g_la - d_c d_l g_ab
        A = np.swapaxes(d2, -3, -2)  # [c, l, a, b] = d_c d_a g_lb
        dT = A + np.swapaxes(A, -1, -2) - d2
        dgi = -np.einsum("...mp,...cpq,...ql->...cml", gi, dg, gi)
        return 0.5 * (np.einsum("...cml,...lab->...cmab", dgi, T) + np.einsum("...ml,...clab->...cmab", gi, dT))

    def norm(self, X, V) -> np.ndarray:
        return np.einsum("...a,...ab,...b->...", V, self.g(X), V)

    def validate_at(self, X) -> None:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if np.any(self.beta(X) <= 0):
            raise GeometryError("lapse is not positive at a sampled point")
        if np.any(np.linalg.eigvalsh(self.kappa(X)) <= 0):
            raise GeometryError("spatial metric is not positive definite at a sampled point")

    def to_json(self) -> dict:
        return {"family": self.name, **self.params}


def _eye3(shape):
    return np.broadcast_to(np.eye(3), tuple(shape) + (3, 3)).copy()


def minkowski() -> WarpedMetric:
    return WarpedMetric(
        beta=lambda X: np.ones(X.shape[:-1]),
        kappa=lambda X: _eye3(X.shape[:-1]),
        dbeta=lambda X: np.zeros(X.shape[:-1] + (4,)),
        dkappa=lambda X: np.zeros(X.shape[:-1] + (4, 3, 3)),
        d2beta=lambda X: np.zeros(X.shape[:-1] + (4, 4)),
        d2kappa=lambda X: np.zeros(X.shape[:-1] + (4, 4, 3, 3)),
        name="minkowski",
    )


def round_sphere(radius: float = 1.0, chart_bound: float = 1e3) -> WarpedMetric:
    """beta = 1 and the round 3-sphere of the given radius in stereographic coordinates."""
    R = float(radius)

    def conf(X):
        y = X[..., 1:]
        return 2.0 * R / (1.0 + np.sum(y * y, axis=-1))

    def kappa(X):
        f = conf(X)
        return (f * f)[..., None, None] * _eye3(X.shape[:-1])

    def dkappa(X):
        y = X[..., 1:]
        s = 1.0 + np.sum(y * y, axis=-1)
        # d_i (4R^2 / s^2) = -16 R^2 y_i / s^3
        grad = np.zeros(X.shape[:-1] + (4,))
        grad[..., 1:] = (-16.0 * R * R / s ** 3)[..., None] * y
        return grad[..., :, None, None] * np.eye(3)

    def d2kappa(X):
        y = X[..., 1:]
        s = 1.0 + np.sum(y * y, axis=-1)
        hess = np.zeros(X.shape[:-1] + (4, 4))
        hess[..., 1:, 1:] = (-16.0 * R * R / s ** 3)[..., None, None] * np.eye(3)
        hess[..., 1:, 1:] += (96.0 * R * R / s ** 4)[..., None, None] * y[..., :, None] * y[..., None, :]
        return hess[..., :, :, None, None] * np.eye(3)

    def margin(X):
        return chart_bound - np.linalg.norm(X[..., 1:], axis=-1)

    return WarpedMetric(
        beta=lambda X: np.ones(X.shape[:-1]),
        kappa=kappa,
        dbeta=lambda X: np.zeros(X.shape[:-1] + (4,)),
        dkappa=dkappa,
        d2beta=lambda X: np.zeros(X.shape[:-1] + (4, 4)),
        d2kappa=d2kappa,
        chart_margin=margin,
        name="round_sphere",
        params={"radius": R},
    )


def perturbed_flat(eps: float = 0.05, coeffs: Sequence[float] = (1.0, -0.5, 0.25),
                   chart_radius: float = 2.0, analytic: bool = True) -> WarpedMetric:
    """beta = 1, kappa = (1 + eps p(y)) delta with p = a y1^2 + b y2 y3 + c y3^2.

    ``analytic=False`` drops the closed-form derivatives so the
    finite-difference fallback is used instead.
    """
    a, b, c = (float(v) for v in coeffs)
    eps = float(eps)

    def kappa(X):
        y = X[..., 1:]
        p = a * y[..., 0] ** 2 + b * y[..., 1] * y[..., 2] + c * y[..., 2] ** 2
        return (1.0 + eps * p)[..., None, None] * _eye3(X.shape[:-1])

    def dkappa(X):
        y = X[..., 1:]
        grad = np.zeros(X.shape[:-1] + (4,))
        grad[..., 1] = 2 * a * y[..., 0]
        grad[..., 2] = b * y[..., 2]
        grad[..., 3] = b * y[..., 1] + 2 * c * y[..., 2]
        return eps * grad[..., :, None, None] * np.eye(3)

    hess = np.zeros((4, 4))
    hess[1, 1] = 2 * a
    hess[2, 3] = hess[3, 2] = b
    hess[3, 3] = 2 * c

    def d2kappa(X):
        return eps * np.broadcast_to(hess, X.shape[:-1] + (4, 4))[..., :, :, None, None] * np.eye(3)

    def margin(X):
        return chart_radius - np.linalg.norm(X[..., 1:], axis=-1)

    return WarpedMetric(beta=lambda X: np.ones(X.shape[:-1]), kappa=kappa,
                        dbeta=(lambda X: np.zeros(X.shape[:-1] + (4,))) if analytic else None,
                        dkappa=dkappa if analytic else None,
                        d2beta=(lambda X: np.zeros(X.shape[:-1] + (4, 4))) if analytic else None,
                        d2kappa=d2kappa if analytic else None, chart_margin=margin,
                        name="perturbed_flat", params={"eps": eps, "coeffs": [a, b, c],
                                                       "chart_radius": chart_radius, "analytic": analytic})


def metric_from_json(obj: dict) -> WarpedMetric:
    family = obj.get("family", "minkowski")
    params = {k: v for k, v in obj.items() if k != "family"}
    builders = {"minkowski": minkowski, "round_sphere": round_sphere, "perturbed_flat": perturbed_flat}
    if family not in builders:
        raise GeometryError(f"unknown metric family {family!r}; choose from {sorted(builders)}")
    try:
        return builders[family](**params)
    except TypeError as exc:
        raise GeometryError(f"bad parameters for {family}: {exc}") from exc


# -- geodesics ----------------------------------------------------------------


@dataclass
class GeodesicCurve:
    x0: np.ndarray
    theta0: np.ndarray
    s: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    rtol: float
    status: str
    dense: object = field(repr=False, default=None)

    @property
    def end(self) -> float:
        return float(self.s[-1])

    def norm_drift(self, metric: WarpedMetric) -> float:
        n = metric.norm(self.points, self.velocities)
        return float(np.abs(n - n[0]).max())

    def __call__(self, s):
        y = self.dense(s)
        return y[:4], y[4:]


def _geodesic_rhs(metric: WarpedMetric):
    def rhs(s, y):
        x, v = y[:4], y[4:]
        G = metric.christoffel(x)
        acc = -np.einsum("mab,a,b->m", G, v, v)
        return np.concatenate([v, acc])
    return rhs


def geodesic_trace(metric: WarpedMetric, x, theta, horizon: float, rtol: float = 1e-12,
                   atol: float = 1e-12, samples: int = 201) -> GeodesicCurve:
    """Integrate the geodesic with x(0) = x, x'(0) = theta up to ``horizon`` or the chart edge."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if not np.any(theta):
        raise GeometryError("initial direction is zero")
    if not metric.in_chart(x):
        raise ChartError("initial point outside the chart")

    def leave(s, y):
        return float(metric.chart_margin(y[:4]))
    leave.terminal = True
    leave.direction = -1

    sol = solve_ivp(_geodesic_rhs(metric), (0.0, float(horizon)), np.concatenate([x, theta]),
                    method="DOP853", rtol=rtol, atol=atol, dense_output=True, events=leave)
    if sol.status < 0:
        raise NumericalAbort(f"geodesic integration failed: {sol.message}")
    end = float(sol.t[-1])
    status = "left_chart" if sol.status == 1 else "horizon"
    s = np.linspace(0.0, end, samples)
    Y = sol.sol(s)
    return GeodesicCurve(x, theta, s, Y[:4].T.copy(), Y[4:].T.copy(), rtol, status, sol.sol)


def geodesic_fan(metric: WarpedMetric, x, thetas: np.ndarray, horizon: float, rtol: float = 1e-10,
                 atol: float = 1e-10):
    """Integrate many geodesics from one point as a single stacked system; returns the dense solution.

    The returned callable maps parameter values (M,) to points (M, N, 4) and
    velocities (M, N, 4).  Integration stops early if any ray leaves the
    coordinate chart; the reached parameter is ``evaluate.end``.
    """
    x = np.asarray(x, dtype=float)
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    N = thetas.shape[0]
    y0 = np.concatenate([np.broadcast_to(x, (N, 4)), thetas], axis=1).ravel()

    def rhs(s, y):
        Y = y.reshape(N, 8)
        X, V = Y[:, :4], Y[:, 4:]
        G = metric.christoffel(X)
        acc = -np.einsum("nmab,na,nb->nm", G, V, V)
        return np.concatenate([V, acc], axis=1).ravel()

    def leave(s, y):
        return float(metric.chart_margin(y.reshape(N, 8)[:, :4]).min())

    leave.terminal = True
    leave.direction = -1
    sol = solve_ivp(rhs, (0.0, float(horizon)), y0, method="DOP853", rtol=rtol, atol=atol, dense_output=True,
                    events=leave)
    if sol.status < 0:
        raise NumericalAbort(f"geodesic fan integration failed: {sol.message}")

    def evaluate(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        Y = sol.sol(s).T.reshape(len(s), N, 8)
        return Y[..., :4], Y[..., 4:]

    evaluate.end = float(sol.t[-1])
    return evaluate


def _spatial_frame(metric: WarpedMetric, x) -> np.ndarray:
    """Three kappa-orthonormal spatial vectors at x (as 4-vectors with zero time part)."""
    K = metric.kappa(x)
    L = np.linalg.cholesky(K)
    B = np.linalg.inv(L).T  # columns orthonormal for K
    E = np.zeros((3, 4))
    E[:, 1:] = B.T
    return E


def _jacobi_rhs(metric: WarpedMetric):
    def rhs(s, y):
        x, v = y[0:4], y[4:8]
        J = y[8:20].reshape(3, 4)
        Jd = y[20:32].reshape(3, 4)
        E = y[32:44].reshape(3, 4)
        G = metric.christoffel(x)
        dG = metric.christoffel_derivative(x)
        acc = -np.einsum("mab,a,b->m", G, v, v)
        Jdd = -np.einsum("cmab,kc,a,b->km", dG, J, v, v) - 2.0 * np.einsum("mab,a,kb->km", G, v, Jd)
        Ed = -np.einsum("mab,a,kb->km", G, v, E)
        return np.concatenate([v, acc, Jd.ravel(), Jdd.ravel(), Ed.ravel()])
    return rhs


def _jacobi_matrix(metric: WarpedMetric, y) -> np.ndarray:
    x = y[0:4]
    J = y[8:20].reshape(3, 4)
    E = y[32:44].reshape(3, 4)
    return np.einsum("ja,ab,kb->jk", E, metric.g(x), J)


def _jacobi_indicators(metric, y) -> tuple:
    A = _jacobi_matrix(metric, y)
    return float(np.linalg.det(A)), float(np.linalg.eigvals(A).real.min())


def first_conjugate_time(metric: WarpedMetric, x, theta, horizon: float, rtol: float = 1e-11,
                         atol: float = 1e-12, samples_per_unit: int = 64, xtol: float = 1e-12):
    """First parameter at which three transverse Jacobi fields become dependent, or None.

    The fields start at zero with initial derivatives given by a spatial
    orthonormal frame E_k.  With E also parallel transported, the matrix
    A_jk = g(E_j, J_k) is ~ s * I near the start.  A conjugate point is
    flagged at the first sign change of det A or of the smallest real
    eigenvalue of A; the latter catches even-multiplicity crossings (e.g. on
    round spheres) where the determinant only touches zero.
    """
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    scale = float(np.abs(theta).max()) or 1.0
    if abs(metric.norm(x, theta)) > 1e-9 * scale * scale:
        raise GeometryError("conjugate-point search expects a light-like direction")
    E0 = _spatial_frame(metric, x)
    y0 = np.concatenate([x, theta, np.zeros(12), E0.ravel(), E0.ravel()])

    def leave(s, y):
        return float(metric.chart_margin(y[:4]))
    leave.terminal = True
    leave.direction = -1

    sol = solve_ivp(_jacobi_rhs(metric), (0.0, float(horizon)), y0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, events=leave)
    if sol.status < 0:
        raise NumericalAbort(f"Jacobi integration failed: {sol.message}")
    end = float(sol.t[-1])
    n = max(16, int(math.ceil(end * samples_per_unit)))
    grid = np.linspace(0.0, end, n + 1)[1:]
    prev = None
    for s in grid:
        ind = _jacobi_indicators(metric, sol.sol(s))
        if prev is not None:
            for k in range(2):
                if prev[1][k] > 0 and ind[k] <= 0:
                    f = lambda t, k=k: _jacobi_indicators(metric, sol.sol(t))[k]  # noqa: E731
                    if ind[k] == 0:
                        return float(s)
                    return float(brentq(f, prev[0], s, xtol=xtol, rtol=4 * np.finfo(float).eps))
        prev = (s, ind)
    return None


# -- Fermi charts -------------------------------------------------------------


class FermiChart:
    """Chart (z0, z1, z2, z3) -> exp_{mu(z0)}(sum z_j E_j(z0)) along a timelike geodesic mu."""

    def __init__(self, metric: WarpedMetric, x0, frame0, s_range: tuple, rtol: float = 1e-12):
        self.metric = metric
        frame0 = np.asarray(frame0, dtype=float)
        self.frame0 = frame0
        x0 = np.asarray(x0, dtype=float)
        G = np.einsum("ia,ab,jb->ij", frame0, metric.g(x0), frame0)
        if not np.allclose(G, np.diag([-1.0, 1.0, 1.0, 1.0]), atol=1e-10):
            raise GeometryError("initial frame is not orthonormal")
        self.rtol = rtol

        def rhs(s, y):
            x, F = y[:4], y[4:].reshape(4, 4)
            Gm = metric.christoffel(x)
            v = F[0]
            Fd = -np.einsum("mab,a,kb->km", Gm, v, F)
            return np.concatenate([v, Fd.ravel()])

        lo, hi = s_range
        y0 = np.concatenate([x0, frame0.ravel()])
        self._fwd = solve_ivp(rhs, (0.0, hi), y0, method="DOP853", rtol=rtol, atol=1e-13,
                              dense_output=True) if hi > 0 else None
        self._bwd = solve_ivp(rhs, (0.0, lo), y0, method="DOP853", rtol=rtol, atol=1e-13,
                              dense_output=True) if lo < 0 else None
        self.s_range = (float(lo), float(hi))

    def _state(self, s: float):
        lo, hi = self.s_range
        if not (lo - 1e-12 <= s <= hi + 1e-12):
            raise ChartError(f"z0 = {s} outside the transported range {self.s_range}")
        if s == 0.0:
            y = np.concatenate([self.frame0[0] * 0 + self._x0(), self.frame0.ravel()])
        elif s > 0:
            y = self._fwd.sol(s)
        else:
            y = self._bwd.sol(s)
        return y[:4], y[4:].reshape(4, 4)

    def _x0(self):
        src = self._fwd if self._fwd is not None else self._bwd
        return src.y[:4, 0]

    def base_point(self, z0: float) -> np.ndarray:
        return self._state(z0)[0]

    def frame(self, z0: float) -> np.ndarray:
        """Rows: transported tangent and spatial legs at mu(z0)."""
        return self._state(z0)[1]

    def gram(self, z0: float) -> np.ndarray:
        x, F = self._state(z0)
        return np.einsum("ia,ab,jb->ij", F, self.metric.g(x), F)

    def __call__(self, z, check: bool = False) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        x, F = self._state(float(z[0]))
        v = z[1:] @ F[1:]
        if not np.any(v):
            out = x
        else:
            curve = geodesic_trace(self.metric, x, v, 1.0, rtol=self.rtol, atol=1e-13, samples=2)
            if curve.status != "horizon":
                raise ChartError("exponential map left the coordinate chart")
            out = curve.points[-1]
        if check:
            self.check_injective(z)
        return out

    def jacobian(self, z, step: float = 1e-6) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        cols = []
        for k in range(4):
            e = np.zeros(4)
            e[k] = step
            cols.append((self(z + e) - self(z - e)) / (2 * step))
        return np.stack(cols, axis=1)

    def check_injective(self, z) -> None:
        """Raise ChartError if the chart's Jacobian degenerates or flips orientation at z."""
        d0 = np.linalg.det(self.jacobian(np.array([z[0], 0.0, 0.0, 0.0])))
        d = np.linalg.det(self.jacobian(z))
        if d * d0 <= 0 or abs(d) < 1e-8 * abs(d0):
            raise ChartError(f"exponential map is not a local diffeomorphism at z = {list(z)}")


def fermi_chart(metric: WarpedMetric, x0, frame0, s_range: tuple = (-1.0, 1.0), rtol: float = 1e-12) -> FermiChart:
    """Fermi chart along the timelike geodesic through x0 with unit tangent frame0[0]."""
    return FermiChart(metric, x0, frame0, s_range, rtol)


# -- observation sets ---------------------------------------------------------


@dataclass(frozen=True)
class ObserverRegion:
    """Static observer worldlines y = const over [t_min, t_max], thickened to a tube of radius ``radius``."""

    positions: tuple
    t_min: float
    t_max: float
    radius: float

    def to_json(self) -> dict:
        return {"positions": [list(p) for p in self.positions], "t_min": self.t_min, "t_max": self.t_max,
                "radius": self.radius}

    @classmethod
    def from_json(cls, obj: dict) -> "ObserverRegion":
        return cls(tuple(tuple(float(c) for c in p) for p in obj["positions"]), float(obj["t_min"]),
                   float(obj["t_max"]), float(obj["radius"]))


@dataclass(frozen=True)
class ObservationSample:
    ray: int
    direction: tuple
    observer: int
    parameter: float
    point: tuple
    distance: float
    earliest: bool = False


@dataclass
class ObservationSet:
    """Observation samples of one source; ``cell`` is the angular spacing of the ray fan in radians."""

    source: tuple
    region: ObserverRegion
    samples: list
    resolution: tuple
    cell: float

    def points(self) -> np.ndarray:
        return np.array([s.point for s in self.samples]).reshape(-1, 4)

    def keys(self) -> set:
        return {(s.ray, s.observer, round(s.parameter, 9)) for s in self.samples}

    def __len__(self):
        return len(self.samples)


def sphere_directions(n_polar: int, n_azimuth: int) -> np.ndarray:
    """Unit vectors on a latitude-longitude grid (cell centres in the polar angle)."""
    pol = (np.arange(n_polar) + 0.5) * np.pi / n_polar
    az = np.arange(n_azimuth) * 2 * np.pi / n_azimuth
    P, A = np.meshgrid(pol, az, indexing="ij")
    return np.stack([np.sin(P) * np.cos(A), np.sin(P) * np.sin(A), np.cos(P)], axis=-1).reshape(-1, 3)


def null_direction(metric: WarpedMetric, x, spatial) -> np.ndarray:
    """Future light-like vector at x whose spatial part is ``spatial`` rescaled to kappa-unit length."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(spatial, dtype=float)
    n = math.sqrt(float(w @ metric.kappa(x) @ w))
    if n == 0:
        raise GeometryError("spatial direction is zero")
    return np.concatenate([[1.0 / math.sqrt(float(metric.beta(x)))], w / n])


def _null_directions(metric: WarpedMetric, q, units: np.ndarray) -> np.ndarray:
    """Future light-like vectors at q whose spatial parts point along ``units`` in a kappa-orthonormal frame."""
    E = _spatial_frame(metric, q)[:, 1:]
    spatial = units @ E
    beta = float(metric.beta(q))
    out = np.zeros((len(units), 4))
    out[:, 0] = 1.0 / math.sqrt(beta)
    out[:, 1:] = spatial
    return out


def observation_set(metric: WarpedMetric, q, region: ObserverRegion, resolution: tuple = (24, 48),
                    horizon: float | None = None, samples: int = 400) -> ObservationSet:
    """Points of the future light cone of q that pass within ``radius`` of an observer worldline.

    One sample is kept per (ray, observer, closest approach).  Distances use the
    spatial metric at the observer position.  The default horizon assumes unit
    lapse, so the affine parameter tracks coordinate time.
    """
    q = np.asarray(q, dtype=float)
    units = sphere_directions(*resolution)
    thetas = _null_directions(metric, q, units)
    obs = np.asarray(region.positions, dtype=float).reshape(-1, 3)
    cell = math.pi / resolution[0]
    if horizon is None:
        horizon = region.t_max - q[0] + region.radius
    if horizon <= 0:
        return ObservationSet(tuple(q), region, [], tuple(resolution), cell)
    fan = geodesic_fan(metric, q, thetas, horizon)
    s_grid = np.linspace(0.0, fan.end, samples)
    X, _ = fan(s_grid)  # (M, N, 4)
    Kobs = [metric.kappa(np.concatenate([[region.t_min], p])) for p in obs]

    def dist(Xs, k):
        d = Xs[..., 1:] - obs[k]
        return np.sqrt(np.einsum("...i,ij,...j->...", d, Kobs[k], d))

    out = []
    for k in range(len(obs)):
        D = dist(X, k)  # (M, N)
        mid = D[1:-1]
        slack = (D[:-2] - mid) + (D[2:] - mid)
        hit = (mid <= D[:-2]) & (mid < D[2:]) & (mid <= region.radius + slack)
        for m, n in zip(*np.nonzero(hit)):
            m = m + 1
            res = minimize_scalar(lambda s: float(dist(fan(s)[0][0, n], k)),
                                  bounds=(s_grid[m - 1], s_grid[m + 1]), method="bounded",
                                  options={"xatol": 1e-10})
            s_star = float(res.x)
            p = fan(s_star)[0][0, n]
            d = float(dist(p, k))
            if d <= region.radius and region.t_min <= p[0] <= region.t_max:
                out.append(ObservationSample(int(n), tuple(float(u) for u in units[n]), k, s_star,
                                             tuple(float(c) for c in p), d))
    out.sort(key=lambda smp: (smp.observer, smp.ray, smp.parameter))
    return ObservationSet(tuple(float(c) for c in q), region, out, tuple(resolution), cell)


def earliest_observation_set(obs: ObservationSet, metric: WarpedMetric | None = None) -> ObservationSet:
    """Keep, per observer worldline, the sample with the smallest arrival time.

    For static worldlines in these metrics coordinate time orders events along
    each worldline, so a time-like curve inside V from one sample to another
    exists exactly when the later one has a larger time coordinate.
    """
    best: dict = {}
    for smp in obs.samples:
        cur = best.get(smp.observer)
        if cur is None or (smp.point[0], smp.ray) < (cur.point[0], cur.ray):
            best[smp.observer] = smp
    chosen = [
        ObservationSample(s.ray, s.direction, s.observer, s.parameter, s.point, s.distance, True)
        for _, s in sorted(best.items())
    ]
    return ObservationSet(obs.source, obs.region, chosen, obs.resolution, obs.cell)


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return math.inf
    D = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def write_observation_csv(path, obs: ObservationSet, earliest: ObservationSet | None = None) -> None:
    first = set() if earliest is None else {(s.ray, s.observer, s.parameter) for s in earliest.samples}
    fmt = lambda v: format(float(v), ".17g")  # noqa: E731
    lines = ["ray,dir_x,dir_y,dir_z,observer,parameter,t,x,y,z,distance,earliest"]
    for s in obs.samples:
        flag = int(s.earliest or (s.ray, s.observer, s.parameter) in first)
        lines.append(",".join([str(s.ray), *map(fmt, s.direction), str(s.observer), fmt(s.parameter),
                               *map(fmt, s.point), fmt(s.distance), str(flag)]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
