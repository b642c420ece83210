"""Exact Gaussian-rational scalars and 4x4 Minkowski tensor algebra.

Every value here is immutable and exact.  Rationals are ``gmpy2.mpq`` when
gmpy2 is importable and :class:`fractions.Fraction` otherwise; the two
compare and hash identically, so callers may pass either (or ints, or
``"p/q"`` strings).  Floats are rejected on purpose.

Index 0 is time throughout, and the Minkowski metric is diag(-1, 1, 1, 1).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .errors import SingularSystemError

try:
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover - exercised only without gmpy2
    Q = Fraction

__all__ = [
    "Q",
    "GaussRational",
    "Covector4",
    "Matrix4",
    "UndefinedEntryError",
    "MINKOWSKI",
    "MINKOWSKI_DIAG",
    "I",
    "ZERO",
    "ONE",
    "to_rational",
    "format_rational",
    "parse_rational",
    "minkowski_pairing",
    "is_lightlike_future",
    "weighted_trace",
    "sandwich",
    "exact_det",
    "exact_solve",
]

_QTYPE = type(Q(0))
_RATIONAL_TYPES = (int, Fraction, _QTYPE)


def to_rational(x):
    """Coerce ``x`` to the package rational type without any rounding."""
    if type(x) is _QTYPE:
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, _RATIONAL_TYPES):
        return Q(x)
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, float):
        raise TypeError(f"refusing float {x!r}: exact arithmetic only, pass a string or Fraction")
    numerator = getattr(x, "numerator", None)
    denominator = getattr(x, "denominator", None)
    if numerator is not None and denominator is not None:
        return Q(int(numerator), int(denominator))
    raise TypeError(f"cannot interpret {type(x).__name__} as a rational")


def format_rational(q) -> str:
    """Canonical ``"p/q"`` string, or ``"p"`` when the denominator is 1."""
    q = to_rational(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str):
    text = text.strip()
    if not text:
        raise ValueError("empty rational literal")
    try:
        if "/" in text:
            num, den = text.split("/")
            return Q(int(num), int(den))
        if "." in text or "e" in text.lower():
            return Q(Fraction(text))
        return Q(int(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad rational literal {text!r}") from exc


class GaussRational(tuple):
    """Exact complex number ``re + im*i`` with rational parts."""

    __slots__ = ()

    def __new__(cls, re=0, im=0):
        return tuple.__new__(cls, (to_rational(re), to_rational(im)))

    @classmethod
    def _raw(cls, re, im):
        return tuple.__new__(cls, (re, im))

    @classmethod
    def coerce(cls, x) -> "GaussRational":
        if type(x) is cls:
            return x
        if isinstance(x, GaussRational):
            return cls._raw(x[0], x[1])
        return cls._raw(to_rational(x), _Q0)

    @property
    def re(self):
        return self[0]

    @property
    def im(self):
        return self[1]

    def is_real(self) -> bool:
        return self[1] == 0

    def is_zero(self) -> bool:
        return self[0] == 0 and self[1] == 0

    def conjugate(self) -> "GaussRational":
        return GaussRational._raw(self[0], -self[1])

    def norm2(self):
        return self[0] * self[0] + self[1] * self[1]

    def __add__(self, other):
        if not isinstance(other, GaussRational):
            try:
                other = GaussRational.coerce(other)
            except TypeError:
                return NotImplemented
        return GaussRational._raw(self[0] + other[0], self[1] + other[1])

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, GaussRational):
            try:
                other = GaussRational.coerce(other)
            except TypeError:
                return NotImplemented
        return GaussRational._raw(self[0] - other[0], self[1] - other[1])

    def __rsub__(self, other):
        try:
            other = GaussRational.coerce(other)
        except TypeError:
            return NotImplemented
        return other - self

    def __neg__(self):
        return GaussRational._raw(-self[0], -self[1])

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, GaussRational):
            try:
                r = to_rational(other)
            except TypeError:
                return NotImplemented
            return GaussRational._raw(self[0] * r, self[1] * r)
        a, b = self
        c, d = other
        if b == 0:
            if d == 0:
                return GaussRational._raw(a * c, _Q0)
            return GaussRational._raw(a * c, a * d)
        if d == 0:
            return GaussRational._raw(a * c, b * c)
        return GaussRational._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, GaussRational):
            try:
                other = GaussRational.coerce(other)
            except TypeError:
                return NotImplemented
        c, d = other
        if c == 0 and d == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        if d == 0:
            return GaussRational._raw(self[0] / c, self[1] / c)
        n = c * c + d * d
        a, b = self
        return GaussRational._raw((a * c + b * d) / n, (b * c - a * d) / n)

    def __rtruediv__(self, other):
        try:
            other = GaussRational.coerce(other)
        except TypeError:
            return NotImplemented
        return other / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return ONE / (self ** -n)
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, GaussRational):
            return self[0] == other[0] and self[1] == other[1]
        if isinstance(other, _RATIONAL_TYPES) and not isinstance(other, bool):
            return self[1] == 0 and self[0] == other
        return NotImplemented

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __hash__(self):
        if self[1] == 0:
            return hash(self[0])
        return hash((self[0], self[1]))

    def __bool__(self):
        return not (self[0] == 0 and self[1] == 0)

    def __float__(self):
        if self[1] != 0:
            raise TypeError("non-real Gaussian rational has no float value")
        return float(self[0])

    def __complex__(self):
        return complex(float(self[0]), float(self[1]))

    def __repr__(self):
        return f"GaussRational({format_rational(self[0])!r}, {format_rational(self[1])!r})"

    def __str__(self):
        re, im = self
        if im == 0:
            return format_rational(re)
        if re == 0:
            return f"{format_rational(im)}i"
        sign = "+" if im > 0 else "-"
        return f"{format_rational(re)}{sign}{format_rational(abs(im))}i"

    def to_json(self) -> dict:
        return {"re": format_rational(self[0]), "im": format_rational(self[1])}

    @classmethod
    def from_json(cls, obj) -> "GaussRational":
        """Accept ``{"re": .., "im": ..}``, a bare rational string, or an int."""
        if isinstance(obj, dict):
            unknown = set(obj) - {"re", "im"}
            if unknown:
                raise ValueError(f"unexpected keys {sorted(unknown)} in Gaussian rational")
            return cls(_json_rational(obj.get("re", "0")), _json_rational(obj.get("im", "0")))
        return cls(_json_rational(obj))


def _json_rational(v):
    if isinstance(v, bool):
        raise ValueError("boolean is not a rational")
    if isinstance(v, int):
        return Q(v)
    if isinstance(v, str):
        return parse_rational(v)
    raise ValueError(f"rational must be given as string or integer, got {v!r}")


_Q0 = Q(0)
ZERO = GaussRational._raw(Q(0), Q(0))
ONE = GaussRational._raw(Q(1), Q(0))
I = GaussRational._raw(Q(0), Q(1))

MINKOWSKI_DIAG = (-1, 1, 1, 1)


class Covector4(tuple):
    """Four Gaussian-rational components, index 0 = time."""

    __slots__ = ()

    def __new__(cls, components: Iterable = (0, 0, 0, 0)):
        comps = tuple(GaussRational.coerce(c) for c in components)
        if len(comps) != 4:
            raise ValueError(f"a covector needs exactly 4 components, got {len(comps)}")
        return tuple.__new__(cls, comps)

    @classmethod
    def _raw(cls, comps):
        return tuple.__new__(cls, comps)

    def __add__(self, other):
        return Covector4._raw(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other):
        return Covector4._raw(tuple(a - b for a, b in zip(self, other)))

    def __neg__(self):
        return Covector4._raw(tuple(-a for a in self))

    def __mul__(self, s):
        if isinstance(s, (Covector4, Matrix4)):
            return NotImplemented
        s = GaussRational.coerce(s)
        return Covector4._raw(tuple(a * s for a in self))

    __rmul__ = __mul__

    def is_real(self) -> bool:
        return all(c[1] == 0 for c in self)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self)

    def raised(self) -> "Covector4":
        """Index raised with the Minkowski metric (time component negated)."""
        return Covector4._raw((-self[0], self[1], self[2], self[3]))

    def __repr__(self):
        return "Covector4(" + ", ".join(str(c) for c in self) + ")"

    def to_json(self) -> list:
        return [c.to_json() for c in self]

    def to_strings(self) -> list:
        """Compact form for real covectors: ``["1", "-3/4", ...]``."""
        if not self.is_real():
            return self.to_json()
        return [format_rational(c[0]) for c in self]

    @classmethod
    def from_json(cls, obj) -> "Covector4":
        if not isinstance(obj, (list, tuple)) or len(obj) != 4:
            raise ValueError(f"covector must be a list of 4 entries, got {obj!r}")
        return cls(GaussRational.from_json(c) for c in obj)


class UndefinedEntryError(LookupError):
    """Read of a diagonal entry in a symmetric-off-diagonal matrix."""


_KINDS = ("general", "antisymmetric", "symmetric", "symmetric-off-diagonal")


class Matrix4:
    """4x4 matrix of Gaussian rationals tagged with a structural kind.

    ``symmetric-off-diagonal`` matrices carry no diagonal; reading one raises
    :class:`UndefinedEntryError`.
    """

    __slots__ = ("_e", "kind")

    def __init__(self, rows: Sequence[Sequence] | None = None, kind: str = "general"):
        if kind not in _KINDS:
            raise ValueError(f"unknown matrix kind {kind!r}")
        if rows is None:
            entries = [ZERO] * 16
        else:
            rows = [list(r) for r in rows]
            if len(rows) != 4 or any(len(r) != 4 for r in rows):
                raise ValueError("Matrix4 needs 4 rows of 4 entries")
            entries = []
            for a in range(4):
                for b in range(4):
                    v = rows[a][b]
                    if kind == "symmetric-off-diagonal" and a == b:
                        entries.append(None)
                    else:
                        entries.append(GaussRational.coerce(v))
        if kind == "symmetric-off-diagonal":
            for a in range(4):
                entries[5 * a] = None
        object.__setattr__(self, "_e", tuple(entries))
        object.__setattr__(self, "kind", kind)
        self._check_kind()

    def __setattr__(self, name, value):
        raise AttributeError("Matrix4 is immutable")

    @classmethod
    def _raw(cls, entries, kind="general") -> "Matrix4":
        m = object.__new__(cls)
        object.__setattr__(m, "_e", tuple(entries))
        object.__setattr__(m, "kind", kind)
        return m

    def _check_kind(self):
        e = self._e
        if self.kind == "antisymmetric":
            for a in range(4):
                for b in range(a, 4):
                    if e[4 * a + b] != -e[4 * b + a]:
                        raise ValueError(f"entry ({a},{b}) breaks antisymmetry")
        elif self.kind in ("symmetric", "symmetric-off-diagonal"):
            for a in range(4):
                for b in range(a + 1, 4):
                    if e[4 * a + b] != e[4 * b + a]:
                        raise ValueError(f"entry ({a},{b}) breaks symmetry")

    # -- access -----------------------------------------------------------

    def __getitem__(self, idx):
        a, b = idx
        v = self._e[4 * a + b]
        if v is None:
            raise UndefinedEntryError(f"diagonal entry ({a},{b}) is not defined for a {self.kind} matrix")
        return v

    def get(self, a: int, b: int, default=None):
        v = self._e[4 * a + b]
        return default if v is None else v

    def rows(self) -> list[list]:
        return [list(self._e[4 * a: 4 * a + 4]) for a in range(4)]

    def entries(self) -> tuple:
        return self._e

    def with_kind(self, kind: str) -> "Matrix4":
        """Re-tag, validating the structure (dropping the diagonal if asked)."""
        if kind == "symmetric-off-diagonal":
            e = list(self._e)
            for a in range(4):
                e[5 * a] = None
            m = Matrix4._raw(e, kind)
        else:
            if any(v is None for v in self._e):
                raise UndefinedEntryError("cannot re-tag a matrix with undefined diagonal")
            m = Matrix4._raw(self._e, kind)
        m._check_kind()
        return m

    def off_diagonal_symmetric(self) -> "Matrix4":
        """Off-diagonal part, required to be symmetric there."""
        return self.with_kind("symmetric-off-diagonal")

    # -- algebra ----------------------------------------------------------

    def _combine_kind(self, other):
        if self.kind == other.kind:
            return self.kind
        if "symmetric-off-diagonal" in (self.kind, other.kind):
            if {self.kind, other.kind} <= {"symmetric", "symmetric-off-diagonal"}:
                return "symmetric-off-diagonal"
            return "symmetric-off-diagonal" if _all_sym_offdiag(self, other) else "general"
        return "general"

    def __add__(self, other):
        if not isinstance(other, Matrix4):
            return NotImplemented
        kind = self._combine_kind(other)
        e = [None if (x is None or y is None) else x + y for x, y in zip(self._e, other._e)]
        if kind != "symmetric-off-diagonal" and any(v is None for v in e):
            kind = "symmetric-off-diagonal"
        return Matrix4._raw(e, kind)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return Matrix4._raw([None if x is None else -x for x in self._e], self.kind)

    def scale(self, s) -> "Matrix4":
        s = GaussRational.coerce(s)
        return Matrix4._raw([None if x is None else x * s for x in self._e], self.kind)

    def __mul__(self, s):
        if isinstance(s, Matrix4):
            return NotImplemented
        return self.scale(s)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if not isinstance(other, Matrix4):
            return NotImplemented
        x, y = self._e, other._e
        if None in x or None in y:
            raise UndefinedEntryError("matrix product needs every entry defined")
        out = []
        for a in range(4):
            ra = x[4 * a: 4 * a + 4]
            for b in range(4):
                acc = ZERO
                for k in range(4):
                    p = ra[k]
                    if p:
                        q = y[4 * k + b]
                        if q:
                            acc = acc + p * q
                out.append(acc)
        return Matrix4._raw(out)

    def transpose(self) -> "Matrix4":
        e = self._e
        return Matrix4._raw([e[4 * b + a] for a in range(4) for b in range(4)], self.kind)

    @property
    def T(self) -> "Matrix4":
        return self.transpose()

    def is_zero(self) -> bool:
        return all(v is None or v.is_zero() for v in self._e)

    def is_real(self) -> bool:
        return all(v is None or v[1] == 0 for v in self._e)

    def __eq__(self, other):
        if not isinstance(other, Matrix4):
            return NotImplemented
        return self._e == other._e

    def __hash__(self):
        return hash((self._e, self.kind))

    def __repr__(self):
        body = "; ".join(" ".join("*" if v is None else str(v) for v in r) for r in self.rows())
        return f"Matrix4[{self.kind}]({body})"

    def to_json(self) -> list:
        return [[None if v is None else v.to_json() for v in r] for r in self.rows()]

    @classmethod
    def zeros(cls, kind="general") -> "Matrix4":
        e = [ZERO] * 16
        if kind == "symmetric-off-diagonal":
            for a in range(4):
                e[5 * a] = None
        return cls._raw(e, kind)

    @classmethod
    def diag(cls, values) -> "Matrix4":
        e = [ZERO] * 16
        for a, v in enumerate(values):
            e[5 * a] = GaussRational.coerce(v)
        return cls._raw(e, "symmetric")


def _all_sym_offdiag(m: Matrix4, n: Matrix4) -> bool:
    for x in (m, n):
        if x.kind not in ("symmetric", "symmetric-off-diagonal"):
            return False
    return True


MINKOWSKI = Matrix4.diag(MINKOWSKI_DIAG)


def minkowski_pairing(xi: Sequence, eta: Sequence) -> GaussRational:
    """h^{ab} xi_a eta_b = -xi_0 eta_0 + sum_i xi_i eta_i."""
    xi = Covector4(xi) if not isinstance(xi, Covector4) else xi
    eta = Covector4(eta) if not isinstance(eta, Covector4) else eta
    return xi[1] * eta[1] + xi[2] * eta[2] + xi[3] * eta[3] - xi[0] * eta[0]


def is_lightlike_future(xi: Sequence) -> bool:
    xi = Covector4(xi) if not isinstance(xi, Covector4) else xi
    if not xi.is_real():
        raise ValueError("light-cone test needs a real covector")
    if xi.is_zero():
        return False
    return minkowski_pairing(xi, xi) == 0 and xi[0][0] > 0


def weighted_trace(F: Matrix4, G: Matrix4) -> GaussRational:
    """sum_{l,m} h^{ll} h^{mm} F_{lm} G_{lm}: both indices raised, then contracted."""
    f, g = F.entries(), G.entries()
    acc = ZERO
    for a in range(4):
        for b in range(4):
            x = f[4 * a + b]
            if not x:
                continue
            y = g[4 * a + b]
            if not y:
                continue
            p = x * y
            # h^{aa} h^{bb} is -1 exactly when one index is time.
            acc = acc - p if (a == 0) != (b == 0) else acc + p
    return acc


def sandwich(F: Matrix4, G: Matrix4) -> Matrix4:
    """The product F.H.G with the Minkowski matrix in the middle."""
    f, g = F.entries(), G.entries()
    if None in f or None in g:
        raise UndefinedEntryError("sandwich needs every entry defined")
    # H only negates the time row of G.
    gh = [-v for v in g[0:4]] + list(g[4:])
    out = []
    for a in range(4):
        ra = f[4 * a: 4 * a + 4]
        for b in range(4):
            acc = ZERO
            for k in range(4):
                p = ra[k]
                if p:
                    q = gh[4 * k + b]
                    if q:
                        acc = acc + p * q
            out.append(acc)
    return Matrix4._raw(out)


def exact_det(rows: Sequence[Sequence]) -> GaussRational:
    """Determinant by exact Gaussian elimination over the Gaussian rationals."""
    m = [[GaussRational.coerce(v) for v in r] for r in rows]
    n = len(m)
    if any(len(r) != n for r in m):
        raise ValueError("determinant needs a square matrix")
    det = ONE
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col]), None)
        if pivot is None:
            return ZERO
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        p = m[col][col]
        det = det * p
        for r in range(col + 1, n):
            if m[r][col]:
                factor = m[r][col] / p
                m[r] = [x - factor * y for x, y in zip(m[r], m[col])]
    return det


def exact_solve(A: Sequence[Sequence], b: Sequence) -> list:
    """Solve A x = b exactly; raises SingularSystemError when A is singular."""
    n = len(A)
    m = [[GaussRational.coerce(v) for v in row] + [GaussRational.coerce(rhs)] for row, rhs in zip(A, b)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col]), None)
        if pivot is None:
            raise SingularSystemError(f"singular system (no pivot in column {col})")
        m[col], m[pivot] = m[pivot], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col]:
                factor = m[r][col]
                m[r] = [x - factor * y for x, y in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]
