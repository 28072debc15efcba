"""Affine Weyl group actions and 2-D lattice machinery.

Folding uses greedy wall reflection: reflect across any violated wall of
the alcove until the point lands inside. This works uniformly for the
reducible and irreducible cases and produces the group-element witness the
congruence checks need.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Optional

from .geometry import Isometry, V_ZERO, Vec2
from .roots import RootSystemData, coroot, reflection
from .scalar import Scalar

FOLD_CAP = 100_000


class FoldError(RuntimeError):
    pass


def affine_reflection(r: Vec2, k: int) -> Isometry:
    """Reflection about the affine hyperplane {<x, r> = k}.

    Equals the linear reflection about r followed by translation by k
    coroots of r; an involution with determinant -1.
    """
    lin = reflection(r)
    return Isometry(lin.linear_rows(), coroot(r).scale(k), _checked=True)


@dataclass(frozen=True)
class FoldResult:
    representative: Vec2
    word: tuple[int, ...]          # indices into the alcove wall list
    isometry: Isometry             # maps the input onto the representative


def fold(x: Vec2, rs: RootSystemData) -> FoldResult:
    """Map x to its orbit representative in the closed alcove.

    Greedily reflects across the first violated wall; terminates for
    affine Weyl groups because each reflection strictly reduces the number
    of affine hyperplanes separating the point from the alcove.
    """
    walls = rs.walls
    planes = [w.halfplane() for w in walls]
    reflections = [affine_reflection(w.root, w.k) for w in walls]
    point = x
    word: list[int] = []
    iso = Isometry.identity()
    for _ in range(FOLD_CAP):
        violated = -1
        for i, plane in enumerate(planes):
            if plane.value(point).sign() > 0:
                violated = i
                break
        if violated < 0:
            return FoldResult(point, tuple(word), iso)
        point = reflections[violated](point)
        iso = reflections[violated].compose(iso)
        word.append(violated)
    raise FoldError("folding did not terminate; malformed alcove data")


class Lattice:
    """Full-rank lattice Z u + Z v with exact basis."""

    __slots__ = ("u", "v", "_det")

    def __init__(self, u: Vec2, v: Vec2) -> None:
        d = u.cross(v)
        if d.is_zero():
            raise ValueError("lattice basis must be full rank")
        self.u = u
        self.v = v
        self._det = d

    @property
    def det(self) -> Scalar:
        return self._det

    @property
    def cell_area(self) -> Scalar:
        return abs(self._det)

    def coords(self, x: Vec2) -> tuple[Scalar, Scalar]:
        """Solve x = s*u + t*v exactly (Cramer)."""
        s = x.cross(self.v) / self._det
        t = self.u.cross(x) / self._det
        return s, t

    def point(self, m: int, n: int) -> Vec2:
        return self.u.scale(m) + self.v.scale(n)

    def contains(self, x: Vec2) -> bool:
        s, t = self.coords(x)
        return s.is_integer() and t.is_integer()

    def contains_lattice(self, other: "Lattice") -> bool:
        return self.contains(other.u) and self.contains(other.v)

    def same_lattice(self, other: "Lattice") -> bool:
        return self.contains_lattice(other) and other.contains_lattice(self)

    def key(self):
        return (self.u.key(), self.v.key())

    def __repr__(self) -> str:
        return f"Lattice(({self.u.x}, {self.u.y}), ({self.v.x}, {self.v.y}))"


def dual_lattice(lat: Lattice) -> Lattice:
    """Vectors pairing integrally with the lattice: inverse-transpose basis."""
    d = lat.det
    u_star = Vec2(lat.v.y / d, -lat.v.x / d)
    v_star = Vec2(-lat.u.y / d, lat.u.x / d)
    return Lattice(u_star, v_star)


def lattice_reduce(x: Vec2, lat: Lattice) -> tuple[Vec2, Vec2]:
    """Split x = representative + gamma with gamma in the lattice and the
    representative having cell coordinates in [0, 1)^2."""
    s, t = lat.coords(x)
    m, n = s.floor(), t.floor()
    gamma = lat.point(m, n)
    return x - gamma, gamma


@dataclass(frozen=True)
class LatticeIntersection:
    lattice: Lattice
    index_in_first: int
    index_in_second: int


def _row_hnf(rows: list[tuple[int, int]]) -> tuple[tuple[int, int], tuple[int, int]]:
    """Hermite-style basis ((a, b), (0, c)) of the integer row lattice."""
    work = [r for r in rows if r != (0, 0)]
    # Euclid on the first column until a single pivot remains
    while sum(1 for r in work if r[0] != 0) > 1:
        nz_idx = sorted((i for i, r in enumerate(work) if r[0] != 0),
                        key=lambda i: abs(work[i][0]))
        pi = nz_idx[0]
        p = work[pi]
        nxt = [p]
        for i, r in enumerate(work):
            if i == pi:
                continue
            if r[0] != 0:
                q = r[0] // p[0]
                r = (r[0] - q * p[0], r[1] - q * p[1])
            if r != (0, 0):
                nxt.append(r)
        work = nxt
    pivot = next((r for r in work if r[0] != 0), None)
    c = 0
    for r in work:
        if r[0] == 0 and r[1] != 0:
            c = gcd(c, abs(r[1]))
    if pivot is None or c == 0:
        raise ValueError("rows do not span a rank-2 lattice")
    a, b = pivot
    if a < 0:
        a, b = -a, -b
    b %= c
    return (a, b), (0, c)


def _rational_pair(s: Scalar, t: Scalar) -> Optional[tuple[Fraction, Fraction]]:
    if not (s.is_rational() and t.is_rational()):
        return None
    return s.a, t.a


def lattice_intersection(l1: Lattice, l2: Lattice) -> Optional[LatticeIntersection]:
    """Intersection of two lattices, or None when incommensurable.

    Commensurable means the change-of-basis matrix is rational; then the
    intersection is computed through the dual-sum identity
    (L1 cap L2)* = L1* + L2* with an integer Hermite reduction, and the
    indices come out as exact determinant ratios.
    """
    # coordinates of l2's basis in l1's frame must be rational
    c_u = _rational_pair(*l1.coords(l2.u))
    c_v = _rational_pair(*l1.coords(l2.v))
    if c_u is None or c_v is None:
        return None
    # dual of l1 in l1-frame is Z^2; dual of l2 in that frame has basis
    # rows given by the inverse-transpose of the rational matrix M
    m00, m10 = c_u
    m01, m11 = c_v
    det = m00 * m11 - m01 * m10
    w1 = (m11 / det, -m01 / det)
    w2 = (-m10 / det, m00 / det)
    den = 1
    for fr in (*w1, *w2):
        den = den * fr.denominator // gcd(den, fr.denominator)
    rows = [
        (den, 0), (0, den),
        (int(w1[0] * den), int(w1[1] * den)),
        (int(w2[0] * den), int(w2[1] * den)),
    ]
    (a, b), (_, c) = _row_hnf(rows)
    # dual-sum basis rows (a,b)/den, (0,c)/den in the l1 frame; dualize back
    sa, sb, sc = Fraction(a, den), Fraction(b, den), Fraction(c, den)
    sdet = sa * sc
    d1 = (Fraction(sc) / sdet, Fraction(0))
    d2 = (-sb / sdet, sa / sdet)
    j_u = l1.u.scale(Scalar(d1[0])) + l1.v.scale(Scalar(d1[1]))
    j_v = l1.u.scale(Scalar(d2[0])) + l1.v.scale(Scalar(d2[1]))
    j = Lattice(j_u, j_v)
    idx1 = abs(j.det / l1.det)
    idx2 = abs(j.det / l2.det)
    if not (idx1.is_integer() and idx2.is_integer()):
        raise AssertionError("intersection indices must be integers")
    result = LatticeIntersection(j, int(idx1.a), int(idx2.a))
    if not (l1.contains_lattice(j) and l2.contains_lattice(j)):
        raise AssertionError("intersection basis escaped the inputs")
    return result


def weyl_membership(iso: Isometry, rs: RootSystemData,
                    coroot_lattice: Optional[Lattice] = None) -> bool:
    """Is the isometry an element of the affine Weyl group W x| Gamma?

    True iff the linear part is a finite Weyl element and the translation
    part lies in the coroot lattice.
    """
    lat = coroot_lattice or Lattice(*rs.coroot_lattice_basis)
    lin_key = iso.linear_rows()
    for w in rs.weyl_group:
        if w.linear_rows() == lin_key:
            return lat.contains(iso.t)
    return False
