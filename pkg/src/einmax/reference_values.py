"""Reference configuration and expected exact values for the built-in verification.

All interaction values are in units of c_pi.  Values are stored as strings so
they are parsed exactly.  A few printed values in the source tables were
corrected where they contradicted their own sub-results; those corrections
are marked below.
"""

from __future__ import annotations

from .symbols import InteractionConfig
from .tensor import Covector4, GaussRational, Matrix4, parse_rational

# Wave covectors (index 0 = time).  The third one is past-pointing.
ZETAS = (
    ("1", "0", "1", "0"),
    ("1", "0", "0", "1"),
    ("-3/4", "-3/4", "0", "0"),
    ("1", "-1", "0", "0"),
)

# Polarization set a uses A_i = -i e_k with k = POL_AXES[a][i].
POL_AXES = {
    1: (3, 2, 3, 3),
    2: (1, 2, 3, 3),
    3: (3, 1, 3, 3),
    4: (3, 2, 2, 3),
    5: (3, 2, 3, 2),
}

# Sum of the four wave covectors (computed; light-like).
TOTAL_COVECTOR = ("9/4", "-7/4", "1", "1")

# Scaling of the target-sum representation: xi_i = zeta_i / alpha_i.
ALPHAS = ("1", "1", "-3/4", "1")

# Pair tables over (12, 13, 14, 23, 24, 34), one-based wave labels.
PAIR_ORDER = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))
PAIR_NORMS = ("-2", "3/2", "-2", "3/2", "-2", "3")
# Weighted traces Tr(F_i, F_j) for polarization set 1.
PAIR_TRACES = ("-2", "3/2", "-2", "0", "0", "3")

# Nonzero upper-triangle entries of the field strengths for set 1 (real after the i*(-i)).
FIELD_STRENGTHS_SET1 = {
    1: {(0, 3): "1", (2, 3): "1"},
    2: {(0, 2): "1", (2, 3): "-1"},
    3: {(0, 3): "-3/4", (1, 3): "-3/4"},
    4: {(0, 3): "1", (1, 3): "-1"},
}

T_SLOT_NAMES = ("02", "03", "12", "13", "23")

# First term, off-diagonal slots (02, 03, 12, 13, 23).
H1_SLOTS = {
    1: ("-5", "-11/2", "7", "7/2", "-7/2"),
    2: ("7/2", "7/2", "-7/2", "-11/2", "-7"),
    3: ("7", "7", "-5", "-7", "7"),
    4: ("5", "-11/2", "0", "-7/2", "1"),
    5: ("-11/2", "5", "-7/2", "0", "1"),
}

# Intermediate pieces of the first term for set 1, before the factor 4.
# The printed (2,3) entry of I1 reads 1/8; -7/8 is forced by the printed total.
# The printed (1,2) entries of I2 and I3 read -7/2 and 7/2, but the displayed
# term-by-term arithmetic evaluates to -7/8 and 7/8; they cancel in the total.
H1_PARTS_SET1 = {
    "I1": {(0, 2): "-5/4", (0, 3): "-9/8", (1, 2): "7/4", (1, 3): "7/8", (2, 3): "-7/8"},
    "I2": {(0, 2): "5/8", (0, 3): "1/2", (1, 2): "-7/8", (1, 3): "0", (2, 3): "5/8"},
    "I3": {(0, 2): "-5/8", (0, 3): "-3/4", (1, 2): "7/8", (1, 3): "0", (2, 3): "-5/8"},
}

# Second term, full matrices.  The printed (3,0) entry of set 4 reads -2.25,
# breaking symmetry with (0,3) = 2.25; the symmetric value is used.
H2_MATRICES = {
    1: (("5", "-7", "-9/4", "0"), ("-7", "5", "7/4", "0"),
        ("-9/4", "7/4", "8", "-29/4"), ("0", "0", "-29/4", "-8")),
    2: (("0", "0", "-7", "7"), ("0", "0", "5", "-5"),
        ("-7", "5", "-7/8", "0"), ("7", "-5", "0", "7/8")),
    3: (("0", "0", "-35/4", "35/4"), ("0", "0", "29/4", "-29/4"),
        ("-35/4", "29/4", "-147/8", "0"), ("35/4", "-29/4", "0", "147/8")),
    4: (("37/4", "-35/4", "4", "9/4"), ("-35/4", "21/4", "-2", "1/4"),
        ("4", "-2", "43/4", "-6"), ("9/4", "1/4", "-6", "-27/4")),
    5: (("37/4", "-35/4", "9/4", "4"), ("-35/4", "21/4", "1/4", "-2"),
        ("9/4", "1/4", "-27/4", "-6"), ("4", "-2", "-6", "43/4")),
}

# Individual pair-pair terms of the second term for set 1, keyed by
# (first pair, second pair) with one-based labels.
P2_TERMS_SET1 = {
    ((1, 2), (3, 4)): (("0", "0", "0", "0"), ("0", "0", "0", "0"),
                       ("0", "0", "3", "0"), ("0", "0", "0", "-3")),
    ((3, 4), (1, 2)): (("0",) * 4,) * 4,
    ((1, 3), (2, 4)): (("0", "0", "-8", "0"), ("0", "0", "8", "0"),
                       ("-8", "8", "0", "-8"), ("0", "0", "-8", "0")),
    ((2, 4), (1, 3)): (("-1", "-1", "-1", "0"), ("-1", "-1", "-1", "0"),
                       ("-1", "-1", "-1", "0"), ("0", "0", "0", "1")),
    ((1, 4), (2, 3)): (("0", "0", "3/4", "0"), ("0", "0", "3/4", "0"),
                       ("3/4", "3/4", "0", "3/4"), ("0", "0", "3/4", "0")),
    ((2, 3), (1, 4)): (("6", "-6", "6", "0"), ("-6", "6", "-6", "0"),
                       ("6", "-6", "6", "0"), ("0", "0", "0", "-6")),
}

# Third term, full matrices.
H3_MATRICES = {
    1: (("-4", "7", "39/20", "24/5"), ("7", "-14", "-133/20", "7/5"),
        ("39/20", "-133/20", "1", "25/4"), ("24/5", "7/5", "25/4", "9")),
    2: (("-28/5", "49/5", "63/20", "-7/2"), ("49/5", "-28/5", "-7/4", "13/2"),
        ("63/20", "-7/4", "231/40", "-7/2"), ("-7/2", "13/2", "-7/2", "-231/40")),
    3: (("-119/10", "19/2", "0", "-203/20"), ("19/2", "-119/10", "53/10", "25/4"),
        ("0", "53/10", "511/40", "0"), ("-203/20", "25/4", "0", "-511/40")),
    4: (("-25/4", "35/4", "0", "-7/4"), ("35/4", "-25/4", "8/5", "73/20"),
        ("0", "8/5", "-7/4", "4"), ("-7/4", "73/20", "4", "7/4")),
    5: (("-25/4", "35/4", "-7/4", "0"), ("35/4", "-25/4", "73/20", "8/5"),
        ("-7/4", "73/20", "7/4", "4"), ("0", "8/5", "4", "-7/4")),
}

# Five-slot projections of the full interaction symbol.
T_VECTORS = {
    1: ("-53/10", "-7/10", "21/10", "49/10", "-9/2"),
    2: ("-7/20", "7", "-1/4", "-4", "-21/2"),
    3: ("-7/4", "28/5", "151/20", "-8", "7"),
    4: ("9", "-5", "-2/5", "2/5", "-1"),
    5: ("-5", "9", "2/5", "-2/5", "-1"),
}


def zetas() -> tuple:
    return tuple(Covector4(z) for z in ZETAS)


def polarizations(a: int) -> tuple:
    pols = []
    for k in POL_AXES[a]:
        comps = [GaussRational(0)] * 4
        comps[k] = GaussRational(0, -1)
        pols.append(Covector4(comps))
    return tuple(pols)


def reference_config(a: int) -> InteractionConfig:
    """Reference wave covectors with polarization set ``a`` (1..5)."""
    if a not in POL_AXES:
        raise KeyError(f"no polarization set {a}; choose 1..5")
    return InteractionConfig(zetas(), polarizations(a))


def as_matrix(rows) -> Matrix4:
    return Matrix4([[parse_rational(v) for v in r] for r in rows])


def as_rationals(values) -> tuple:
    return tuple(parse_rational(v) for v in values)
