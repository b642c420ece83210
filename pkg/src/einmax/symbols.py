"""Principal symbols of the quartic plane-wave interaction terms.

All quantities are exact.  Interaction outputs are reported in units of
``c_pi = (2*pi)**-3``; that factor is carried as a flag and never evaluated.

Conventions (checked against the reference tables in ``reference_values``):

* field strength ``F_ab = i (zeta_a A_b - zeta_b A_a)``
* ``Tr(F, G) = sum h^ll h^mm F_lm G_lm`` and the sandwich ``F.H.G``
* the causal inverse contributes ``1/|zeta|^2_h`` for a non-characteristic
  covector; for a pair of light-like covectors ``|z_i + z_j|^2 = 2 h(z_i, z_j)``
* the first term is ``4 (I1 + I2 + I3)`` with all 24 orderings summed and
  positive signs on the trace parts
* the second term sums over the six unordered pairs ``{i, j}``; each pair
  contributes the contraction of ``H W_ij H`` against the complementary pair's
  summed covector, times the complementary ``W``
* the third term sums over ordered ``(l, i)`` with ``l != i``; the wave ``l``
  is re-evaluated at the shifted covector ``z_j + z_k + z_l`` and enters the
  symmetrized stress form together with wave ``i``
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Iterable, Sequence

from .errors import CharacteristicError, ConfigError, ResonanceError
from .tensor import (
    MINKOWSKI,
    ONE,
    ZERO,
    Covector4,
    GaussRational,
    I,
    Matrix4,
    exact_det,
    format_rational,
    minkowski_pairing,
    sandwich,
    weighted_trace,
)

__all__ = [
    "InteractionConfig",
    "InteractionSymbol",
    "FiveVector",
    "T_SLOTS",
    "field_strength_symbol",
    "check_gauge",
    "check_conservation",
    "pair_norms",
    "h2hat_symbol",
    "w_symbol",
    "h1_parts",
    "h1_matrix",
    "h1_symbol",
    "p2_term",
    "h2_matrix",
    "h2_interaction_symbol",
    "h3_matrix",
    "h3_interaction_symbol",
    "total_symbol",
    "t_projection",
    "independence_determinant",
    "causal_inverse_factor",
]

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
T_SLOTS = ((0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_HALF = GaussRational("1/2")
_QUARTER = GaussRational("1/4")


def _cov(x) -> Covector4:
    return x if isinstance(x, Covector4) else Covector4(x)


def _complement(*idx: int) -> tuple:
    return tuple(x for x in range(4) if x not in idx)


# -- configurations -----------------------------------------------------------


@dataclass(frozen=True)
class InteractionConfig:
    """Four light-like wave covectors with their polarizations."""

    zetas: tuple
    pols: tuple

    def __init__(self, zetas: Sequence, pols: Sequence, validate: bool = True):
        z = tuple(_cov(v) for v in zetas)
        a = tuple(_cov(v) for v in pols)
        if len(z) != 4 or len(a) != 4:
            raise ConfigError(f"need 4 covectors and 4 polarizations, got {len(z)} and {len(a)}")
        object.__setattr__(self, "zetas", z)
        object.__setattr__(self, "pols", a)
        if validate:
            self.validate()

    def validate(self) -> None:
        # Both time orientations are admitted: one reference covector has a
        # negative time component and is a legitimate input.
        for n, (zeta, pol) in enumerate(zip(self.zetas, self.pols), start=1):
            if not zeta.is_real():
                raise ConfigError(f"wave {n}: covector must be real")
            if zeta.is_zero():
                raise ConfigError(f"wave {n}: covector is zero")
            if minkowski_pairing(zeta, zeta) != 0:
                raise ConfigError(f"wave {n}: covector {zeta!r} is not light-like")
            if not check_gauge(zeta, pol):
                raise ConfigError(f"wave {n}: polarization violates the gauge condition")

    def field_strengths(self) -> tuple:
        return tuple(field_strength_symbol(z, a) for z, a in zip(self.zetas, self.pols))

    def total_covector(self) -> Covector4:
        s = self.zetas[0]
        for z in self.zetas[1:]:
            s = s + z
        return s

    def permuted(self, order: Sequence[int]) -> "InteractionConfig":
        return InteractionConfig([self.zetas[i] for i in order], [self.pols[i] for i in order], validate=False)

    def scaled_pols(self, lam) -> "InteractionConfig":
        return InteractionConfig(self.zetas, [p * lam for p in self.pols], validate=False)

    def to_json(self) -> dict:
        return {"zetas": [z.to_strings() for z in self.zetas], "pols": [p.to_json() for p in self.pols]}

    @classmethod
    def from_json(cls, obj) -> "InteractionConfig":
        if not isinstance(obj, dict) or "zetas" not in obj or "pols" not in obj:
            raise ConfigError('config must be an object with "zetas" and "pols"')
        try:
            zetas = [Covector4.from_json(z) for z in obj["zetas"]]
            pols = [Covector4.from_json(p) for p in obj["pols"]]
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        return cls(zetas, pols)


# -- elementary symbols -------------------------------------------------------


def field_strength_symbol(zeta, A) -> Matrix4:
    zeta, A = _cov(zeta), _cov(A)
    e = [ZERO] * 16
    for a in range(4):
        for b in range(a + 1, 4):
            v = I * (zeta[a] * A[b] - zeta[b] * A[a])
            e[4 * a + b] = v
            e[4 * b + a] = -v
    return Matrix4._raw(e, "antisymmetric")


def check_gauge(zeta, A) -> bool:
    """h^{ab} zeta_b A_a == 0 exactly."""
    return minkowski_pairing(zeta, A).is_zero()


def check_conservation(zeta, J) -> bool:
    """zeta_i J^i == 0 exactly, with J given as a contravariant (index-up) vector."""
    zeta, J = _cov(zeta), _cov(J)
    acc = ZERO
    for a in range(4):
        acc = acc + zeta[a] * J[a]
    return acc.is_zero()


def causal_inverse_factor(zeta) -> GaussRational:
    n = minkowski_pairing(zeta, zeta)
    if n.is_zero():
        raise CharacteristicError(f"covector {_cov(zeta)!r} is characteristic", ())
    return ONE / n


def pair_norms(config: InteractionConfig) -> tuple:
    """Symmetric 4x4 table of |z_i + z_j|^2_h = 2 h(z_i, z_j); zero on the diagonal."""
    z = config.zetas
    rows = [[ZERO] * 4 for _ in range(4)]
    for i, j in PAIRS:
        v = minkowski_pairing(z[i], z[j]) * 2
        rows[i][j] = rows[j][i] = v
    return tuple(tuple(r) for r in rows)


def _h_trace(t: GaussRational) -> Matrix4:
    return Matrix4.diag((-t, t, t, t))


def h2hat_symbol(Fi: Matrix4, Fj: Matrix4) -> Matrix4:
    """Quadratic stress form 2 Fi H Fj + (1/2) H Tr(Fi, Fj)."""
    return sandwich(Fi, Fj).scale(2) + _h_trace(weighted_trace(Fi, Fj) * _HALF)


def _stress_pair(Fi: Matrix4, Fj: Matrix4) -> Matrix4:
    """h2hat(Fi, Fj) + h2hat(Fj, Fi); symmetric."""
    m = sandwich(Fi, Fj)
    m = m + m.transpose()
    return (m.scale(2) + _h_trace(weighted_trace(Fi, Fj))).with_kind("symmetric")


def _resonance_check(value: GaussRational, indices: tuple, what: str) -> None:
    if value.is_zero():
        labels = ",".join(str(i + 1) for i in indices)
        raise ResonanceError(f"resonant {what} ({labels}): characteristic covector sum", indices)


def _w_from(F: Sequence[Matrix4], G: Sequence[Sequence], i: int, j: int) -> Matrix4:
    _resonance_check(G[i][j], (i, j), "pair")
    return _stress_pair(F[i], F[j]).scale(ONE / G[i][j])


def w_symbol(config: InteractionConfig, i: int, j: int) -> Matrix4:
    """Symmetric pair source (zero-based wave indices) with the causal-inverse factor applied."""
    if i == j:
        raise ResonanceError(f"resonant pair ({i + 1},{j + 1}): identical waves", (i, j))
    return _w_from(config.field_strengths(), pair_norms(config), i, j)


def _contract(M: Matrix4, s: Covector4) -> GaussRational:
    """(H M H)^{pq} s_p s_q."""
    e = M.entries()
    hs = (-s[0], s[1], s[2], s[3])
    acc = ZERO
    for p in range(4):
        if not hs[p]:
            continue
        row = ZERO
        for q in range(4):
            if hs[q] and e[4 * p + q]:
                row = row + e[4 * p + q] * hs[q]
        acc = acc + hs[p] * row
    return acc


# -- interaction symbols ------------------------------------------------------


@dataclass(frozen=True)
class InteractionSymbol:
    """Off-diagonal symmetric interaction symbol, in units of c_pi unless flagged otherwise."""

    offdiag: Matrix4
    cpi_factored: bool = True

    def __post_init__(self):
        if self.offdiag.kind != "symmetric-off-diagonal":
            object.__setattr__(self, "offdiag", self.offdiag.off_diagonal_symmetric())

    def __getitem__(self, idx):
        return self.offdiag[idx]

    def __add__(self, other: "InteractionSymbol") -> "InteractionSymbol":
        if self.cpi_factored != other.cpi_factored:
            raise ValueError("cannot add symbols with different c_pi conventions")
        return InteractionSymbol(self.offdiag + other.offdiag, self.cpi_factored)

    def scale(self, s) -> "InteractionSymbol":
        return InteractionSymbol(self.offdiag.scale(s), self.cpi_factored)

    def is_zero(self) -> bool:
        return self.offdiag.is_zero()

    def t_vector(self) -> "FiveVector":
        return t_projection(self)

    def to_json(self) -> dict:
        exact, decimal = [], []
        for a in range(4):
            er, dr = [], []
            for b in range(4):
                if a == b:
                    er.append(None)
                    dr.append(None)
                else:
                    v = self.offdiag[a, b]
                    er.append(v.to_json())
                    dr.append(_decimal(v))
            exact.append(er)
            decimal.append(dr)
        return {"cpi_factored": self.cpi_factored, "exact": exact, "decimal": decimal}


def _decimal(v: GaussRational):
    if v.is_real():
        return float(v.re)
    return {"re": float(v.re), "im": float(v.im)}


def h1_parts(config: InteractionConfig) -> tuple:
    """The three summed pieces (I1, I2, I3) of the first term, without the overall factor 4."""
    F = config.field_strengths()
    G = pair_norms(config)
    inv = {}
    for i, j in PAIRS:
        _resonance_check(G[i][j], (i, j), "pair")
        inv[i, j] = inv[j, i] = ONE / G[i][j]
    prods = {(i, j): sandwich(F[i], F[j]) for i in range(4) for j in range(4) if i != j}
    traces = {(i, j): weighted_trace(F[i], F[j]) for i in range(4) for j in range(4) if i != j}
    I1 = I2 = I3 = Matrix4.zeros()
    for i, j, k, l in permutations(range(4)):
        q = inv[i, j]
        inner = prods[i, j].scale(q)
        I1 = I1 + sandwich(sandwich(F[k], inner), F[l])
        I2 = I2 + prods[k, l].scale(q * traces[i, j] * _QUARTER)
        I3 = I3 + prods[i, j].scale(q * traces[k, l] * _QUARTER)
    return I1, I2, I3


def h1_matrix(config: InteractionConfig) -> Matrix4:
    I1, I2, I3 = h1_parts(config)
    return (I1 + I2 + I3).scale(4).with_kind("symmetric")


def h1_symbol(config: InteractionConfig) -> InteractionSymbol:
    return InteractionSymbol(h1_matrix(config).off_diagonal_symmetric())


def _w_table(config: InteractionConfig) -> dict:
    F = config.field_strengths()
    G = pair_norms(config)
    return {(i, j): _w_from(F, G, i, j) for i, j in PAIRS}


def p2_term(config: InteractionConfig, first: tuple, second: tuple, _W: dict | None = None) -> Matrix4:
    """One pair-pair term: contraction of H W_first H against the summed covector of
    ``second``, times W_second.  Pairs are zero-based index tuples."""
    W = _W if _W is not None else _w_table(config)
    a, b = sorted(first)
    c, d = sorted(second)
    s = config.zetas[c] + config.zetas[d]
    return W[c, d].scale(_contract(W[a, b], s))


def h2_matrix(config: InteractionConfig) -> Matrix4:
    W = _w_table(config)
    total = Matrix4.zeros("symmetric")
    for i, j in PAIRS:
        total = total + p2_term(config, (i, j), _complement(i, j), W)
    return total


def h2_interaction_symbol(config: InteractionConfig) -> InteractionSymbol:
    return InteractionSymbol(h2_matrix(config).off_diagonal_symmetric())


def h3_matrix(config: InteractionConfig) -> Matrix4:
    F = config.field_strengths()
    W = _w_table(config)
    z, pols = config.zetas, config.pols
    total = Matrix4.zeros("symmetric")
    for l in range(4):
        for i in range(4):
            if i == l:
                continue
            j, k = _complement(i, l)
            shifted = z[j] + z[k] + z[l]
            norm = minkowski_pairing(shifted, shifted)
            _resonance_check(norm, (j, k, l), "triple")
            coeff = _contract(W[j, k], z[l])
            if coeff.is_zero():
                continue
            F_shift = field_strength_symbol(shifted, pols[l])
            total = total + _stress_pair(F[i], F_shift).scale(coeff / norm)
    return total


def h3_interaction_symbol(config: InteractionConfig) -> InteractionSymbol:
    return InteractionSymbol(h3_matrix(config).off_diagonal_symmetric())


def total_symbol(config: InteractionConfig) -> InteractionSymbol:
    return h1_symbol(config) + h2_interaction_symbol(config) + h3_interaction_symbol(config)


# -- five-slot projection -----------------------------------------------------


class FiveVector(tuple):
    """Entries at the (02, 03, 12, 13, 23) slots of a symmetric symbol."""

    __slots__ = ()

    def __new__(cls, entries: Iterable):
        vals = tuple(GaussRational.coerce(v) for v in entries)
        if len(vals) != 5:
            raise ValueError(f"FiveVector needs 5 entries, got {len(vals)}")
        return tuple.__new__(cls, vals)

    def to_strings(self) -> list:
        return [format_rational(v.re) if v.is_real() else str(v) for v in self]

    def to_json(self) -> dict:
        return {"slots": ["02", "03", "12", "13", "23"], "exact": [v.to_json() for v in self],
                "decimal": [_decimal(v) for v in self]}


def t_projection(S) -> FiveVector:
    M = S.offdiag if isinstance(S, InteractionSymbol) else S
    return FiveVector(M[a, b] for a, b in T_SLOTS)


def independence_determinant(vs: Sequence[Sequence]) -> GaussRational:
    rows = [list(v) for v in vs]
    if len(rows) != 5 or any(len(r) != 5 for r in rows):
        raise ValueError("independence determinant needs five 5-vectors")
    return exact_det(rows)
