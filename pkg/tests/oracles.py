"""Independent index-loop oracles.

Nothing here uses the package's arithmetic: numbers are a minimal complex
type over ``fractions.Fraction``, matrices are nested lists, and every
contraction is an explicit loop over indices.
"""

from fractions import Fraction
from itertools import permutations

ETA = [-1, 1, 1, 1]


class C:
    """Exact complex number over Fraction; only what the oracles need."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def of(x):
        return x if isinstance(x, C) else C(x)

    def __add__(self, o):
        o = C.of(o)
        return C(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = C.of(o)
        return C(self.re - o.re, self.im - o.im)

    def __neg__(self):
        return C(-self.re, -self.im)

    def __mul__(self, o):
        o = C.of(o)
        return C(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = C.of(o)
        d = o.re * o.re + o.im * o.im
        return C((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)

    def __rtruediv__(self, o):
        return C.of(o) / self

    def __eq__(self, o):
        o = C.of(o)
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"C({self.re}, {self.im})"


I = C(0, 1)
HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


def num(x):
    """Oracle number from a package value (GaussRational or rational)."""
    if isinstance(x, tuple) and len(x) == 2:
        return C(Fraction(str(x[0])), Fraction(str(x[1])))
    return C(Fraction(str(x)))


def vec(v):
    return [num(c) for c in v]


def mat(M):
    return [[num(M.get(a, b, 0)) for b in range(4)] for a in range(4)]


def zeros():
    return [[C(0)] * 4 for _ in range(4)]


def add(A, B):
    return [[A[a][b] + B[a][b] for b in range(4)] for a in range(4)]


def scale(A, s):
    return [[A[a][b] * s for b in range(4)] for a in range(4)]


def pairing(x, y):
    acc = C(0)
    for a in range(4):
        acc = acc + x[a] * y[a] * ETA[a]
    return acc


def field_strength(z, A):
    return [[I * (z[a] * A[b] - z[b] * A[a]) for b in range(4)] for a in range(4)]


def trace(F, G):
    acc = C(0)
    for a in range(4):
        for b in range(4):
            acc = acc + F[a][b] * G[a][b] * (ETA[a] * ETA[b])
    return acc


def sandwich(F, G):
    out = zeros()
    for a in range(4):
        for b in range(4):
            acc = C(0)
            for c in range(4):
                acc = acc + F[a][c] * G[c][b] * ETA[c]
            out[a][b] = acc
    return out


def h2hat(F, G):
    S = sandwich(F, G)
    t = trace(F, G)
    return [[S[a][b] * 2 + (t * HALF * ETA[a] if a == b else C(0)) for b in range(4)] for a in range(4)]


def contract(M, s):
    acc = C(0)
    for p in range(4):
        for q in range(4):
            acc = acc + M[p][q] * s[p] * s[q] * (ETA[p] * ETA[q])
    return acc


def symbol_parts(zetas, pols):
    """(H1, H2, H3) full 4x4 matrices from the component formulas."""
    z = [vec(v) for v in zetas]
    A = [vec(v) for v in pols]
    F = [field_strength(z[i], A[i]) for i in range(4)]
    G = {(i, j): pairing(z[i], z[j]) * 2 for i in range(4) for j in range(4) if i != j}

    H1 = zeros()
    for i, j, k, l in permutations(range(4)):
        q = C(1) / G[i, j]
        inner = scale(sandwich(F[i], F[j]), q)
        t1 = sandwich(sandwich(F[k], inner), F[l])
        t2 = scale(sandwich(F[k], F[l]), q * trace(F[i], F[j]) * QUARTER)
        t3 = scale(sandwich(F[i], F[j]), q * trace(F[k], F[l]) * QUARTER)
        H1 = add(H1, add(t1, add(t2, t3)))
    H1 = scale(H1, 4)

    W = {}
    for i in range(4):
        for j in range(i + 1, 4):
            W[i, j] = scale(add(h2hat(F[i], F[j]), h2hat(F[j], F[i])), C(1) / G[i, j])

    H2 = zeros()
    for i in range(4):
        for j in range(i + 1, 4):
            k, l = [x for x in range(4) if x not in (i, j)]
            s = [z[k][a] + z[l][a] for a in range(4)]
            H2 = add(H2, scale(W[k, l], contract(W[i, j], s)))

    H3 = zeros()
    for l in range(4):
        for i in range(4):
            if i == l:
                continue
            j, k = [x for x in range(4) if x not in (i, l)]
            zt = [z[j][a] + z[k][a] + z[l][a] for a in range(4)]
            Fs = field_strength(zt, A[l])
            c = contract(W[j, k], z[l]) / pairing(zt, zt)
            H3 = add(H3, scale(add(h2hat(F[i], Fs), h2hat(Fs, F[i])), c))
    return H1, H2, H3


def cofactor_det(rows):
    """Laplace expansion along the first row."""
    rows = [[C.of(x) for x in r] for r in rows]
    n = len(rows)
    if n == 1:
        return rows[0][0]
    acc = C(0)
    for c in range(n):
        if rows[0][c] == 0:
            continue
        minor = [r[:c] + r[c + 1:] for r in rows[1:]]
        term = rows[0][c] * cofactor_det(minor)
        acc = acc + term if c % 2 == 0 else acc - term
    return acc
