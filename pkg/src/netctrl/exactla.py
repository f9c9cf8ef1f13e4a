"""Exact linear algebra over rationals.

Matrices are plain lists of rows holding `fractions.Fraction` entries; all
routines in this module are exact. Floats enter the picture only through
`to_float`, which is the hand-off point to numpy for eigenvalue and
singular-value work.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

Mat = list  # list[list[Fraction]]

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(x) -> Fraction:
    """Coerce an int, Fraction or 'p/q' string to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a rational entry")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def mat(rows: Sequence[Sequence]) -> Mat:
    """Build a rational matrix from nested ints/strings/Fractions."""
    out = [[frac(x) for x in row] for row in rows]
    if out and any(len(r) != len(out[0]) for r in out):
        raise ValueError("ragged rows in matrix literal")
    return out


def shape(m: Mat) -> tuple[int, int]:
    return (len(m), len(m[0]) if m else 0)


def zeros(r: int, c: int) -> Mat:
    return [[ZERO] * c for _ in range(r)]


def eye(n: int) -> Mat:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def copy(m: Mat) -> Mat:
    return [row[:] for row in m]


def transpose(m: Mat) -> Mat:
    r, c = shape(m)
    return [[m[i][j] for i in range(r)] for j in range(c)]


def madd(a: Mat, b: Mat) -> Mat:
    if shape(a) != shape(b):
        raise ValueError(f"shape mismatch {shape(a)} + {shape(b)}")
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def msub(a: Mat, b: Mat) -> Mat:
    if shape(a) != shape(b):
        raise ValueError(f"shape mismatch {shape(a)} - {shape(b)}")
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mscale(a: Mat, s: Fraction) -> Mat:
    return [[x * s for x in row] for row in a]


def mmul(a: Mat, b: Mat) -> Mat:
    ra, ca = shape(a)
    rb, cb = shape(b)
    if ra == 0:
        return []
    if ca != rb:
        # zero-dimension blocks degrade to (0, 0); treat them as conformable
        if ca == 0 and rb == 0:
            return zeros(ra, cb)
        raise ValueError(f"shape mismatch {shape(a)} @ {shape(b)}")
    if cb == 0:
        return zeros(ra, 0)
    bt = transpose(b)
    return [[sum((x * y for x, y in zip(row, col)), ZERO) for col in bt] for row in a]


def hstack(blocks: Sequence[Mat]) -> Mat:
    blocks = [b for b in blocks]
    rows = max((len(b) for b in blocks), default=0)
    if any(len(b) not in (0, rows) for b in blocks):
        raise ValueError("hstack row mismatch")
    out = []
    for i in range(rows):
        row: list[Fraction] = []
        for b in blocks:
            row.extend(b[i] if b else [])
        out.append(row)
    return out


def vstack(blocks: Sequence[Mat]) -> Mat:
    blocks = [b for b in blocks if shape(b)[0] > 0]
    if not blocks:
        return []
    cols = {shape(b)[1] for b in blocks}
    if len(cols) > 1:
        raise ValueError("vstack column mismatch")
    out: Mat = []
    for b in blocks:
        out.extend(copy(b))
    return out


def block_diag(blocks: Sequence[Mat]) -> Mat:
    rtot = sum(shape(b)[0] for b in blocks)
    ctot = sum(shape(b)[1] for b in blocks)
    out = zeros(rtot, ctot)
    r0 = c0 = 0
    for b in blocks:
        r, c = shape(b)
        for i in range(r):
            out[r0 + i][c0 : c0 + c] = b[i][:]
        r0 += r
        c0 += c
    return out


def submatrix(m: Mat, rows: Sequence[int] | None, cols: Sequence[int] | None) -> Mat:
    r, c = shape(m)
    rows = list(range(r)) if rows is None else list(rows)
    cols = list(range(c)) if cols is None else list(cols)
    return [[m[i][j] for j in cols] for i in rows]


def to_float(m: Mat) -> np.ndarray:
    r, c = shape(m)
    out = np.empty((r, c), dtype=float)
    for i in range(r):
        for j in range(c):
            out[i, j] = float(m[i][j])
    return out


def _eliminate(m: Mat) -> tuple[Mat, list[int], int]:
    """Row-reduce a copy of m; returns (echelon, pivot columns, swap count)."""
    a = copy(m)
    r, c = shape(a)
    pivots: list[int] = []
    swaps = 0
    row = 0
    for col in range(c):
        piv = next((i for i in range(row, r) if a[i][col] != 0), None)
        if piv is None:
            continue
        if piv != row:
            a[row], a[piv] = a[piv], a[row]
            swaps += 1
        pv = a[row][col]
        for i in range(row + 1, r):
            f = a[i][col]
            if f == 0:
                continue
            ratio = f / pv
            ai, ar = a[i], a[row]
            for j in range(col, c):
                ai[j] -= ratio * ar[j]
        pivots.append(col)
        row += 1
        if row == r:
            break
    return a, pivots, swaps


def exact_rank(m: Mat) -> int:
    if not m or not m[0]:
        return 0
    return len(_eliminate(m)[1])


def exact_det(m: Mat) -> Fraction:
    r, c = shape(m)
    if r != c:
        raise ValueError("determinant of a non-square matrix")
    if r == 0:
        return ONE
    ech, pivots, swaps = _eliminate(m)
    if len(pivots) < r:
        return ZERO
    det = ONE if swaps % 2 == 0 else -ONE
    for i in range(r):
        det *= ech[i][pivots[i]]
    return det


def exact_solve(a: Mat, b: Mat) -> Mat:
    """Solve a @ X = b exactly; a must be square and invertible."""
    n, m = shape(a)
    if n != m:
        raise ValueError("solve needs a square system")
    rb, cb = shape(b)
    if rb != n:
        raise ValueError("right-hand side row mismatch")
    if n == 0:
        return zeros(0, cb)
    aug = [a[i][:] + b[i][:] for i in range(n)]
    for col in range(n):
        piv = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system in exact_solve")
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for i in range(n):
            if i == col or aug[i][col] == 0:
                continue
            f = aug[i][col]
            aug[i] = [x - f * y for x, y in zip(aug[i], aug[col])]
    return [row[n:] for row in aug]


class Poly:
    """Univariate polynomial with Fraction coefficients, ascending degree.

    The zero polynomial has an empty coefficient list.
    """

    __slots__ = ("c",)

    def __init__(self, coeffs: Sequence = ()):
        c = [frac(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.c = c

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return not self.c

    def __bool__(self) -> bool:
        return bool(self.c)

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.c == other.c

    def __hash__(self):
        return hash(tuple(self.c))

    def __add__(self, other: "Poly") -> "Poly":
        n = max(len(self.c), len(other.c))
        a = self.c + [ZERO] * (n - len(self.c))
        b = other.c + [ZERO] * (n - len(other.c))
        return Poly([x + y for x, y in zip(a, b)])

    def __sub__(self, other: "Poly") -> "Poly":
        n = max(len(self.c), len(other.c))
        a = self.c + [ZERO] * (n - len(self.c))
        b = other.c + [ZERO] * (n - len(other.c))
        return Poly([x - y for x, y in zip(a, b)])

    def __mul__(self, other: "Poly") -> "Poly":
        if not self.c or not other.c:
            return Poly()
        out = [ZERO] * (len(self.c) + len(other.c) - 1)
        for i, x in enumerate(self.c):
            if x == 0:
                continue
            for j, y in enumerate(other.c):
                out[i + j] += x * y
        return Poly(out)

    def scale(self, s: Fraction) -> "Poly":
        return Poly([x * frac(s) for x in self.c])

    def shift(self, k: int) -> "Poly":
        """Multiply by lambda**k."""
        if not self.c:
            return Poly()
        return Poly([ZERO] * k + self.c)

    def __call__(self, x):
        """Evaluate with Horner's rule; x may be Fraction, float or complex."""
        acc = 0 * x if not isinstance(x, Fraction) else ZERO
        for coeff in reversed(self.c):
            acc = acc * x + (coeff if isinstance(x, Fraction) else float(coeff))
        return acc

    def monic(self) -> bool:
        return bool(self.c) and self.c[-1] == 1

    def __repr__(self) -> str:
        if not self.c:
            return "Poly(0)"
        terms = []
        for i, x in enumerate(self.c):
            if x == 0:
                continue
            terms.append(f"{x}*L^{i}" if i else f"{x}")
        return "Poly(" + " + ".join(terms) + ")"
