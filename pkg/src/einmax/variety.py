"""Exact search of the light-cone variety for nondegenerate interaction configurations.

A candidate is four future light-like covectors ``xi_i`` together with five
polarization sets.  The target covector is split as ``sum alpha_i xi_i``; the
scaled waves ``alpha_i xi_i`` feed the interaction symbol, and the candidate is
accepted when the five-slot projections of the five symbols are linearly
independent, i.e. their 5x5 determinant is exactly nonzero.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from math import gcd, lcm
from typing import Sequence

from .errors import ConfigError, ResonanceError, SearchExhausted, SingularSystemError
from .symbols import InteractionConfig, check_gauge, independence_determinant, t_projection, total_symbol
from .tensor import Q, ZERO, Covector4, GaussRational, exact_solve, format_rational, minkowski_pairing

__all__ = [
    "VarietyPoint",
    "SamplingBox",
    "lightlike_from_params",
    "sample_lightlike",
    "gauge_basis",
    "solve_alphas",
    "evaluate_candidate",
    "search_nondegenerate",
    "exact_rank",
    "reference_box",
]

_MINUS_I = GaussRational(0, -1)


def _primitive(components: Sequence) -> Covector4:
    """Scale a rational vector with positive leading entry to coprime integers."""
    qs = [Q(c) for c in components]
    den = lcm(*(int(q.denominator) for q in qs))
    ints = [int(q * den) for q in qs]
    g = 0
    for v in ints:
        g = gcd(g, v)
    g = g or 1
    return Covector4(v // g for v in ints)


def lightlike_from_params(u, v) -> Covector4:
    """Future light-like covector (1+s, 1-s, 2u, 2v), s = u^2 + v^2, reduced to coprime integers."""
    u, v = Q(u), Q(v)
    s = u * u + v * v
    return _primitive((1 + s, 1 - s, 2 * u, 2 * v))


def sample_lightlike(seed: int) -> Covector4:
    """Deterministic exact future light-like covector; seed 0 gives (1, 1, 0, 0)."""
    if seed == 0:
        return lightlike_from_params(0, 0)
    rng = random.Random(f"lightlike:{seed}")
    den = rng.randint(1, 12)
    u = Q(rng.randint(-24, 24), den)
    v = Q(rng.randint(-24, 24), rng.randint(1, 12))
    return lightlike_from_params(u, v)


def exact_rank(rows: Sequence[Sequence]) -> int:
    m = [[GaussRational.coerce(x) for x in r] for r in rows]
    if not m:
        return 0
    rank, ncol = 0, len(m[0])
    for col in range(ncol):
        pivot = next((r for r in range(rank, len(m)) if m[r][col]), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        p = m[rank][col]
        for r in range(rank + 1, len(m)):
            if m[r][col]:
                f = m[r][col] / p
                m[r] = [x - f * y for x, y in zip(m[r], m[rank])]
        rank += 1
    return rank


def gauge_basis(zeta) -> tuple:
    """Three independent solutions A of h(zeta, A) = 0; zeta itself comes first."""
    zeta = zeta if isinstance(zeta, Covector4) else Covector4(zeta)
    if zeta.is_zero():
        raise ConfigError("gauge basis of the zero covector is undefined")
    if minkowski_pairing(zeta, zeta) != 0:
        raise ConfigError(f"gauge basis requires a light-like covector, got {zeta!r}")
    z0 = zeta[0]
    candidates = [zeta]
    for k in range(1, 4):
        comps = [ZERO] * 4
        comps[k] = GaussRational(1)
        comps[0] = zeta[k] / z0
        candidates.append(Covector4(comps))
    chosen: list = []
    for c in candidates:
        if exact_rank([*chosen, c]) > len(chosen):
            chosen.append(c)
        if len(chosen) == 3:
            break
    return tuple(chosen)


def solve_alphas(target, xis: Sequence) -> tuple:
    """Exact coefficients with sum_i alpha_i xi_i = target."""
    target = target if isinstance(target, Covector4) else Covector4(target)
    xis = [x if isinstance(x, Covector4) else Covector4(x) for x in xis]
    if len(xis) != 4:
        raise ValueError("need four covectors")
    A = [[xis[i][r] for i in range(4)] for r in range(4)]
    try:
        sol = exact_solve(A, list(target))
    except SingularSystemError as exc:
        raise SingularSystemError(f"covectors are linearly dependent: {exc}") from exc
    if not all(a.is_real() for a in sol):
        raise ValueError("complex coefficients for real covectors")
    return tuple(a.re for a in sol)


@dataclass(frozen=True)
class VarietyPoint:
    target: Covector4
    xis: tuple
    alphas: tuple
    pol_sets: tuple
    t_vectors: tuple
    determinant: GaussRational
    seed: int = 0
    iteration: int = 0

    def configs(self) -> tuple:
        waves = [x * a for x, a in zip(self.xis, self.alphas)]
        return tuple(InteractionConfig(waves, pols) for pols in self.pol_sets)

    def to_json(self) -> dict:
        return {
            "target": self.target.to_strings(),
            "xis": [x.to_strings() for x in self.xis],
            "alphas": [format_rational(a) for a in self.alphas],
            "pol_sets": [[p.to_json() for p in ps] for ps in self.pol_sets],
            "t_vectors": [v.to_json() for v in self.t_vectors],
            "determinant": {"exact": self.determinant.to_json(), "decimal": float(self.determinant.re)
                            if self.determinant.is_real() else None},
            "seed": self.seed,
            "iteration": self.iteration,
        }


def _orthogonal_pair(n: Sequence) -> tuple:
    """Two independent rational 3-vectors orthogonal to the rational vector n."""
    cands = []
    for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
        # cross product n x e
        c = (n[1] * e[2] - n[2] * e[1], n[2] * e[0] - n[0] * e[2], n[0] * e[1] - n[1] * e[0])
        if any(x != 0 for x in c):
            cands.append(c)
    b1 = cands[0]
    for c in cands[1:]:
        cross = (b1[1] * c[2] - b1[2] * c[1], b1[2] * c[0] - b1[0] * c[2], b1[0] * c[1] - b1[1] * c[0])
        if any(x != 0 for x in cross):
            return b1, c
    raise ValueError("degenerate direction")


def _perturb_lightlike(center: Covector4, a, b) -> Covector4:
    """Move a future light-like covector on the cone by a rational stereographic step.

    The spatial direction n is projected from its antipode, so the center maps
    to the origin of the chart and (a, b) are its chart coordinates.
    """
    t = center[0].re
    n = [center[k].re / t for k in (1, 2, 3)]
    b1, b2 = _orthogonal_pair(n)
    w = [a * x + b * y for x, y in zip(b1, b2)]
    s = sum(x * x for x in w)
    m = [((1 - s) * nk + 2 * wk) / (1 + s) for nk, wk in zip(n, w)]
    return Covector4([t, t * m[0], t * m[1], t * m[2]])


@dataclass
class SamplingBox:
    """Neighbourhood of four future light-like centers.

    ``radius`` bounds the chart coordinates of each perturbation.  When
    ``pol_sets`` is given, iteration 0 evaluates the centers with those sets.
    ``identical_pol_sets`` replicates one sampled set five times, which forces a
    zero determinant (a negative control).
    """

    centers: tuple
    radius: object = Q(1, 8)
    pol_sets: tuple | None = None
    identical_pol_sets: bool = False
    grid: int = 64
    coeff_range: int = 3

    def __post_init__(self):
        self.centers = tuple(c if isinstance(c, Covector4) else Covector4(c) for c in self.centers)
        self.radius = Q(self.radius)
        if len(self.centers) != 4:
            raise ConfigError("a sampling box needs four centers")
        for c in self.centers:
            if not c.is_real() or minkowski_pairing(c, c) != 0 or c[0].re <= 0:
                raise ConfigError(f"box center {c!r} is not future light-like")

    def sample_xis(self, rng: random.Random) -> tuple:
        out = []
        for c in self.centers:
            a = self.radius * Q(rng.randint(-self.grid, self.grid), self.grid)
            b = self.radius * Q(rng.randint(-self.grid, self.grid), self.grid)
            out.append(_perturb_lightlike(c, a, b))
        return tuple(out)

    def sample_pol_sets(self, xis: Sequence, rng: random.Random) -> tuple:
        bases = [gauge_basis(x) for x in xis]
        nsets = 1 if self.identical_pol_sets else 5
        sets = []
        for _ in range(nsets):
            pols = []
            for basis in bases:
                coeffs = [0, 0, 0]
                while not any(coeffs[1:]):
                    # a pure multiple of xi gives zero field strength
                    coeffs = [rng.randint(-self.coeff_range, self.coeff_range) for _ in basis]
                vec = basis[0] * coeffs[0] + basis[1] * coeffs[1] + basis[2] * coeffs[2]
                pols.append(vec * _MINUS_I)
            sets.append(tuple(pols))
        if self.identical_pol_sets:
            sets = sets * 5
        return tuple(sets)


def evaluate_candidate(target: Covector4, xis: Sequence, pol_sets: Sequence) -> tuple:
    """Return (alphas, t_vectors, D); raises on dependent or resonant candidates."""
    alphas = solve_alphas(target, xis)
    if any(a == 0 for a in alphas):
        raise SingularSystemError("a zero coefficient removes one wave")
    waves = [x * a for x, a in zip(xis, alphas)]
    tvecs = []
    for pols in pol_sets:
        for x, p in zip(xis, pols):
            if not check_gauge(x, p):
                raise ConfigError("sampled polarization violates the gauge condition")
        cfg = InteractionConfig(waves, pols)
        tvecs.append(t_projection(total_symbol(cfg)))
    return alphas, tuple(tvecs), independence_determinant(tvecs)


def search_nondegenerate(target, box: SamplingBox, seed: int = 0, max_iter: int = 50) -> VarietyPoint:
    """Rejection sampling in ``box`` until the determinant is exactly nonzero."""
    target = target if isinstance(target, Covector4) else Covector4(target)
    if not target.is_real() or minkowski_pairing(target, target) != 0 or target[0].re <= 0:
        raise ConfigError("target must be a future light-like covector")
    best = None
    best_key = (-1, 0)
    for it in range(max_iter):
        rng = random.Random(f"{seed}:{it}")
        if it == 0 and box.pol_sets is not None:
            xis = box.centers
            pol_sets = tuple(tuple(ps) for ps in box.pol_sets)
        else:
            xis = box.sample_xis(rng)
            pol_sets = box.sample_pol_sets(xis, rng)
        try:
            alphas, tvecs, det = evaluate_candidate(target, xis, pol_sets)
        except (SingularSystemError, ResonanceError, ConfigError):
            continue
        if not det.is_zero():
            return VarietyPoint(target, tuple(xis), alphas, pol_sets, tvecs, det, seed, it)
        rank = exact_rank(tvecs)
        if rank > best_key[0]:
            best_key = (rank, it)
            best = VarietyPoint(target, tuple(xis), alphas, pol_sets, tvecs, det, seed, it)
    msg = f"no nondegenerate configuration in {max_iter} iterations (seed {seed})"
    if best is not None:
        msg += f"; best candidate at iteration {best.iteration} has rank {best_key[0]} and D = {best.determinant}"
    raise SearchExhausted(msg, best=best, best_det=None if best is None else best.determinant, iterations=max_iter)


def reference_box(radius=Q(1, 8), with_reference_pols: bool = False) -> tuple:
    """Target covector and a box centred on the reference light-like directions."""
    from . import reference_values as ref

    target = Covector4(ref.TOTAL_COVECTOR)
    alphas = ref.as_rationals(ref.ALPHAS)
    centers = tuple(z * GaussRational(1 / a) for z, a in zip(ref.zetas(), alphas))
    pol_sets = tuple(ref.polarizations(a) for a in range(1, 6)) if with_reference_pols else None
    return target, SamplingBox(centers, radius, pol_sets)
