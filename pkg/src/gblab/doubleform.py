"""Bigraded exterior algebra of double forms.

A double form of bidegree (p, q) over an n-dimensional oriented inner-product
space is an element of Lambda^p V* (x) Lambda^q V*.  Coefficients are stored
densely, indexed by pairs of strictly increasing multi-indices ranked in
colexicographic order.  The product wedges first slots with first slots and
second slots with second slots, with no interchange sign.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

__all__ = [
    "DoubleForm",
    "OrientedFrameContext",
    "ShapeError",
    "multi_indices",
    "index_rank",
    "linear_combine",
    "wedge",
    "power",
    "berezin",
    "pfaffian_skew",
]

MAX_DIM = 8


class ShapeError(ValueError):
    """Dimension or bidegree mismatch between algebra elements."""


@lru_cache(maxsize=None)
def multi_indices(n: int, p: int) -> tuple[tuple[int, ...], ...]:
    """Strictly increasing p-tuples drawn from range(n), in colex order."""
    if p < 0 or p > n:
        return ()
    return tuple(sorted(combinations(range(n), p), key=lambda I: I[::-1]))


@lru_cache(maxsize=None)
def _rank_table(n: int, p: int) -> dict:
    return {I: r for r, I in enumerate(multi_indices(n, p))}


def index_rank(n: int, I) -> int:
    """Colex rank of the strictly increasing multi-index I."""
    return _rank_table(n, len(I))[tuple(I)]


def _merge_sign(I: tuple, J: tuple):
    """Merge two increasing tuples; return (sign, merged) or (0, None) on a
    repeated index.  The sign is the parity of the shuffle sorting I+J."""
    if set(I) & set(J):
        return 0, None
    merged = I + J
    inv = 0
    for a in range(len(merged)):
        for b in range(a + 1, len(merged)):
            if merged[a] > merged[b]:
                inv += 1
    return (-1) ** inv, tuple(sorted(merged))


@lru_cache(maxsize=None)
def _slot_table(n: int, pa: int, pb: int):
    """All (rank_a, rank_b, rank_out, sign) with nonzero wedge in one slot."""
    out = []
    if pa + pb > n:
        return out
    A = multi_indices(n, pa)
    B = multi_indices(n, pb)
    rk = _rank_table(n, pa + pb)
    for ra, I in enumerate(A):
        for rb, J in enumerate(B):
            s, K = _merge_sign(I, J)
            if s:
                out.append((ra, rb, rk[K], s))
    return out


@lru_cache(maxsize=None)
def _wedge_table(n: int, pa: int, qa: int, pb: int, qb: int):
    """Flattened index/sign arrays for the full double-form wedge."""
    t1 = _slot_table(n, pa, pb)
    t2 = _slot_table(n, qa, qb)
    if not t1 or not t2:
        return None
    na_q = len(multi_indices(n, qa))
    nb_q = len(multi_indices(n, qb))
    no_q = len(multi_indices(n, qa + qb))
    ia, ib, io, sg = [], [], [], []
    for ra, rb, ro, s1 in t1:
        for ca, cb, co, s2 in t2:
            ia.append(ra * na_q + ca)
            ib.append(rb * nb_q + cb)
            io.append(ro * no_q + co)
            sg.append(s1 * s2)
    return (
        np.asarray(ia, dtype=np.intp),
        np.asarray(ib, dtype=np.intp),
        np.asarray(io, dtype=np.intp),
        np.asarray(sg, dtype=np.float64),
    )


def _table_shape(n: int, p: int, q: int) -> tuple[int, int]:
    return len(multi_indices(n, p)), len(multi_indices(n, q))


@dataclass(frozen=True)
class OrientedFrameContext:
    """Fixes the distinguished unit n-covector used by the Berezin integral."""

    n: int
    orientation: int = 1

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ShapeError("orientation must be +1 or -1")


@dataclass(frozen=True)
class DoubleForm:
    """Element of Lambda^p (x) Lambda^q over an n-dimensional space.

    coeffs has shape (C(n,p), C(n,q)); entry [rank(I), rank(J)] is the
    coefficient of e^I (x) e^J.  Values are treated as immutable.
    """

    n: int
    p: int
    q: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not (1 <= self.n <= MAX_DIM):
            raise ShapeError(f"dimension {self.n} outside 1..{MAX_DIM}")
        # bidegrees above n are the zero space; their tables are empty
        if not (0 <= self.p <= MAX_DIM and 0 <= self.q <= MAX_DIM):
            raise ShapeError(f"bidegree ({self.p},{self.q}) outside 0..{MAX_DIM}")
        want = _table_shape(self.n, self.p, self.q)
        if self.coeffs.shape != want:
            raise ShapeError(f"coefficient table {self.coeffs.shape} != {want}")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(n: int, p: int, q: int, exact: bool = False) -> "DoubleForm":
        shape = _table_shape(n, p, q)
        if exact:
            c = np.zeros(shape, dtype=object)
            c[...] = 0
        else:
            c = np.zeros(shape)
        return DoubleForm(n, p, q, c)

    @staticmethod
    def unit(n: int, exact: bool = False) -> "DoubleForm":
        """The (0,0) multiplicative unit."""
        z = DoubleForm.zero(n, 0, 0, exact=exact)
        z.coeffs[0, 0] = 1
        return z

    @staticmethod
    def from_coeffs(n: int, p: int, q: int, coeffs) -> "DoubleForm":
        arr = np.array(coeffs)
        return DoubleForm(n, p, q, arr)

    @staticmethod
    def metric_form(n: int, exact: bool = False) -> "DoubleForm":
        """The metric as a (1,1) form in an orthonormal frame: sum e^i (x) e^i."""
        if exact:
            c = np.zeros((n, n), dtype=object)
            for i in range(n):
                c[i, i] = 1
        else:
            c = np.eye(n)
        return DoubleForm(n, 1, 1, c)

    @staticmethod
    def volume(n: int) -> "DoubleForm":
        """The (n,0) form with unit coefficient."""
        z = DoubleForm.zero(n, n, 0)
        z.coeffs[0, 0] = 1.0
        return z

    # -- algebra -----------------------------------------------------------

    def same_shape(self, other: "DoubleForm") -> bool:
        return (self.n, self.p, self.q) == (other.n, other.p, other.q)

    def __add__(self, other: "DoubleForm") -> "DoubleForm":
        if not self.same_shape(other):
            raise ShapeError("sum of double forms with different shapes")
        return DoubleForm(self.n, self.p, self.q, self.coeffs + other.coeffs)

    def __sub__(self, other: "DoubleForm") -> "DoubleForm":
        if not self.same_shape(other):
            raise ShapeError("difference of double forms with different shapes")
        return DoubleForm(self.n, self.p, self.q, self.coeffs - other.coeffs)

    def __rmul__(self, s) -> "DoubleForm":
        return DoubleForm(self.n, self.p, self.q, s * self.coeffs)

    def __mul__(self, other):
        if isinstance(other, DoubleForm):
            return wedge(self, other)
        return DoubleForm(self.n, self.p, self.q, other * self.coeffs)

    def __neg__(self) -> "DoubleForm":
        return DoubleForm(self.n, self.p, self.q, -self.coeffs)

    def norm_inf(self) -> float:
        if self.coeffs.size == 0:
            return 0.0
        return float(np.max(np.abs(self.coeffs.astype(float))))

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.norm_inf() <= tol

    def allclose(self, other: "DoubleForm", tol: float = 1e-12) -> bool:
        return self.same_shape(other) and (self - other).norm_inf() <= tol


def linear_combine(a: DoubleForm, b: DoubleForm, s, t) -> DoubleForm:
    """Coefficientwise s*a + t*b; shapes must agree."""
    if not a.same_shape(b):
        raise ShapeError("linear_combine needs matching (n, p, q)")
    return DoubleForm(a.n, a.p, a.q, s * a.coeffs + t * b.coeffs)


def wedge(a: DoubleForm, b: DoubleForm) -> DoubleForm:
    """Slotwise wedge (a1^b1) (x) (a2^b2), no interchange sign.

    Overflow of either slot degree past n yields the zero form of the
    clipped bidegree.
    """
    if a.n != b.n:
        raise ShapeError("wedge of forms over different dimensions")
    n = a.n
    p, q = a.p + b.p, a.q + b.q
    exact = a.coeffs.dtype == object or b.coeffs.dtype == object
    if p > n or q > n:
        return DoubleForm.zero(n, min(p, n), min(q, n), exact=exact)
    table = _wedge_table(n, a.p, a.q, b.p, b.q)
    out = DoubleForm.zero(n, p, q, exact=exact)
    if table is None:
        return out
    ia, ib, io, sg = table
    af, bf, of = a.coeffs.ravel(), b.coeffs.ravel(), out.coeffs.ravel()
    if exact:
        for k in range(len(ia)):
            of[io[k]] += int(sg[k]) * af[ia[k]] * bf[ib[k]]
        # object ravel returns a copy only if non-contiguous; ours is a view
        return out
    np.add.at(of, io, sg * af[ia] * bf[ib])
    return out


def power(a: DoubleForm, m: int) -> DoubleForm:
    """m-fold wedge power; power(a, 0) is the (0,0) unit."""
    if m < 0:
        raise ShapeError("negative wedge power")
    exact = a.coeffs.dtype == object
    if m == 0:
        return DoubleForm.unit(a.n, exact=exact)
    out = a
    for _ in range(m - 1):
        out = wedge(out, a)
    return out


def berezin(a: DoubleForm, ctx: OrientedFrameContext) -> DoubleForm:
    """Contract the second slot with the oriented unit volume element.

    For q == n this extracts the coefficients at J = (0,...,n-1); for q < n
    the contraction vanishes and the zero (p, 0) form is returned.
    """
    if a.n != ctx.n:
        raise ShapeError("context dimension mismatch")
    exact = a.coeffs.dtype == object
    out = DoubleForm.zero(a.n, a.p, 0, exact=exact)
    if a.q == a.n:
        out.coeffs[:, 0] = ctx.orientation * a.coeffs[:, 0]
    return out


def _pfaffian_matchings(avail: tuple, A) -> object:
    if not avail:
        return 1.0
    i = avail[0]
    rest = avail[1:]
    total = None
    for pos, j in enumerate(rest):
        sub = tuple(x for x in rest if x != j)
        term = ((-1) ** pos) * (A[i][j] * _pfaffian_matchings(sub, A))
        total = term if total is None else total + term
    return total


def pfaffian_skew(A) -> object:
    """Combinatorial Pfaffian of an even skew matrix.

    Entries may be scalars or double forms of even degree (which commute).
    Expansion is over perfect matchings, so Pf([[0,a],[-a,0]]) = a.
    """
    A = list(map(list, A))
    m = len(A)
    if m % 2 != 0 or any(len(row) != m for row in A):
        raise ShapeError("pfaffian needs a square matrix of even size")
    if m == 0:
        return 1.0
    if all(np.isscalar(A[i][j]) or isinstance(A[i][j], (int, float)) for i in range(m) for j in range(m)):
        M = np.asarray(A, dtype=float)
        if np.max(np.abs(M + M.T)) > 1e-9 * max(1.0, np.max(np.abs(M))):
            raise ShapeError("matrix is not skew-symmetric")
    res = _pfaffian_matchings(tuple(range(m)), A)
    if isinstance(res, DoubleForm):
        return res
    return float(res) if np.isscalar(res) else res
