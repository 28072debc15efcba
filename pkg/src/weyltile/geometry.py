"""Exact 2-D polygon algebra over Q(sqrt2, sqrt3).

Regions are finite unions of interior-disjoint convex polygons. Every set
handled here is produced by cutting convex cells with lines and moving the
pieces by isometries, so convex parts suffice and keep all operations exact.
Equality of regions is always "up to null sets": area-zero slivers are
dropped wherever they appear.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Optional, Sequence

from .scalar import ONE, ZERO, Scalar, rat

Location = Literal["interior", "boundary", "outside"]


@dataclass(frozen=True)
class Vec2:
    x: Scalar
    y: Scalar

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def scale(self, s) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    def dot(self, other: "Vec2") -> Scalar:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Vec2") -> Scalar:
        return self.x * other.y - self.y * other.x

    def norm_sq(self) -> Scalar:
        return self.dot(self)

    def is_zero(self) -> bool:
        return self.x.is_zero() and self.y.is_zero()

    def key(self):
        """Deterministic sort key (exact lexicographic by value)."""
        return (self.x, self.y)


def vec(x, y) -> Vec2:
    return Vec2(Scalar.coerce(x), Scalar.coerce(y))


V_ZERO = Vec2(ZERO, ZERO)


@dataclass(frozen=True)
class HalfPlane:
    """Point set {p : <p, normal> <= offset}."""

    normal: Vec2
    offset: Scalar

    def __post_init__(self):
        if self.normal.is_zero():
            raise ValueError("half-plane normal must be nonzero")

    def value(self, p: Vec2) -> Scalar:
        return p.dot(self.normal) - self.offset

    def complement(self) -> "HalfPlane":
        return HalfPlane(-self.normal, -self.offset)


class Isometry:
    """Orthogonal 2x2 part plus translation, all coordinates exact."""

    __slots__ = ("m00", "m01", "m10", "m11", "t", "_hash")

    def __init__(self, linear: Sequence[Sequence[Scalar]], translation: Vec2,
                 *, _checked: bool = False) -> None:
        (self.m00, self.m01), (self.m10, self.m11) = linear
        self.t = translation
        self._hash = None
        if not _checked:
            self._validate()

    def _validate(self) -> None:
        c0 = self.m00 * self.m00 + self.m10 * self.m10
        c1 = self.m01 * self.m01 + self.m11 * self.m11
        cx = self.m00 * self.m01 + self.m10 * self.m11
        if c0 != ONE or c1 != ONE or not cx.is_zero():
            raise ValueError("linear part is not orthogonal")
        if self.det() != ONE and self.det() != Scalar(-1):
            raise ValueError("determinant must be +1 or -1")

    @staticmethod
    def identity() -> "Isometry":
        return Isometry(((ONE, ZERO), (ZERO, ONE)), V_ZERO, _checked=True)

    @staticmethod
    def translation(v: Vec2) -> "Isometry":
        return Isometry(((ONE, ZERO), (ZERO, ONE)), v, _checked=True)

    def det(self) -> Scalar:
        return self.m00 * self.m11 - self.m01 * self.m10

    def linear_rows(self) -> tuple[tuple[Scalar, Scalar], tuple[Scalar, Scalar]]:
        return ((self.m00, self.m01), (self.m10, self.m11))

    def is_translation(self) -> bool:
        return (self.m00 == ONE and self.m11 == ONE
                and self.m01.is_zero() and self.m10.is_zero())

    def __call__(self, p: Vec2) -> Vec2:
        return Vec2(self.m00 * p.x + self.m01 * p.y + self.t.x,
                    self.m10 * p.x + self.m11 * p.y + self.t.y)

    def apply_linear(self, p: Vec2) -> Vec2:
        return Vec2(self.m00 * p.x + self.m01 * p.y,
                    self.m10 * p.x + self.m11 * p.y)

    def compose(self, other: "Isometry") -> "Isometry":
        """Returns self after other: (self.compose(other))(x) = self(other(x))."""
        lin = (
            (self.m00 * other.m00 + self.m01 * other.m10,
             self.m00 * other.m01 + self.m01 * other.m11),
            (self.m10 * other.m00 + self.m11 * other.m10,
             self.m10 * other.m01 + self.m11 * other.m11),
        )
        return Isometry(lin, self(other.t), _checked=True)

    def inverse(self) -> "Isometry":
        # orthogonal: inverse of linear part is its transpose
        lin = ((self.m00, self.m10), (self.m01, self.m11))
        ti = Vec2(-(self.m00 * self.t.x + self.m10 * self.t.y),
                  -(self.m01 * self.t.x + self.m11 * self.t.y))
        return Isometry(lin, ti, _checked=True)

    def key(self):
        return (self.m00, self.m01, self.m10, self.m11, self.t.x, self.t.y)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Isometry):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __repr__(self) -> str:
        return (f"Isometry([[{self.m00}, {self.m01}], [{self.m10}, "
                f"{self.m11}]], t=({self.t.x}, {self.t.y}))")


def _dedupe_and_strip_collinear(vertices: Sequence[Vec2]) -> list[Vec2]:
    verts = list(vertices)
    out: list[Vec2] = []
    for v in verts:
        if not out or v != out[-1]:
            out.append(v)
    if len(out) > 1 and out[0] == out[-1]:
        out.pop()
    changed = True
    while changed and len(out) >= 3:
        changed = False
        n = len(out)
        for i in range(n):
            a, b, c = out[i - 1], out[i], out[(i + 1) % n]
            if (b - a).cross(c - b).is_zero():
                out.pop(i)
                changed = True
                break
    return out


class ConvexPolygon:
    """Strictly convex polygon, vertices CCW, positive area."""

    __slots__ = ("vertices", "_area", "_bbox", "_fbbox", "_planes")

    def __init__(self, vertices: Sequence[Vec2], *,
                 _prevalidated: bool = False) -> None:
        if _prevalidated:
            verts = list(vertices)
        else:
            verts = _dedupe_and_strip_collinear(vertices)
            if len(verts) < 3:
                raise ValueError(
                    "polygon needs at least 3 non-collinear vertices")
            n = len(verts)
            for i in range(n):
                a, b, c = verts[i - 1], verts[i], verts[(i + 1) % n]
                if (b - a).cross(c - b).sign() <= 0:
                    raise ValueError("vertices must be strictly convex and CCW")
        # canonical start: lexicographically smallest vertex
        n = len(verts)
        start = min(range(n), key=lambda i: verts[i].key())
        self.vertices = tuple(verts[start:] + verts[:start])
        self._area: Optional[Scalar] = None
        self._bbox = None
        self._fbbox = None
        self._planes = None

    @classmethod
    def from_valid(cls, vertices: Sequence[Vec2]) -> "ConvexPolygon":
        """Wrap vertices known to be strictly convex CCW (e.g. the image of
        a valid polygon under an invertible affine map)."""
        return cls(vertices, _prevalidated=True)

    @property
    def area(self) -> Scalar:
        if self._area is None:
            s = ZERO
            n = len(self.vertices)
            for i in range(n):
                s = s + self.vertices[i].cross(self.vertices[(i + 1) % n])
            self._area = s / 2
        return self._area

    @property
    def bbox(self) -> tuple[Scalar, Scalar, Scalar, Scalar]:
        if self._bbox is None:
            xs = [v.x for v in self.vertices]
            ys = [v.y for v in self.vertices]
            self._bbox = (min(xs), min(ys), max(xs), max(ys))
        return self._bbox

    @property
    def fbbox(self) -> tuple[float, float, float, float]:
        """Float bounding box, for conservative pruning only."""
        if self._fbbox is None:
            xs = [float(v.x) for v in self.vertices]
            ys = [float(v.y) for v in self.vertices]
            self._fbbox = (min(xs), min(ys), max(xs), max(ys))
        return self._fbbox

    def edges(self) -> Iterable[tuple[Vec2, Vec2]]:
        n = len(self.vertices)
        for i in range(n):
            yield self.vertices[i], self.vertices[(i + 1) % n]

    def edge_halfplanes(self) -> list[HalfPlane]:
        """Half-planes whose intersection is this polygon."""
        if self._planes is None:
            planes = []
            for a, b in self.edges():
                e = b - a
                normal = Vec2(e.y, -e.x)  # outward for CCW order
                planes.append(HalfPlane(normal, normal.dot(a)))
            self._planes = planes
        return self._planes

    def locate(self, p: Vec2) -> Location:
        on_edge = False
        for a, b in self.edges():
            s = (b - a).cross(p - a).sign()
            if s < 0:
                return "outside"
            if s == 0:
                on_edge = True
        return "boundary" if on_edge else "interior"

    def centroid(self) -> Vec2:
        sx, sy = ZERO, ZERO
        n = len(self.vertices)
        for v in self.vertices:
            sx = sx + v.x
            sy = sy + v.y
        return Vec2(sx / n, sy / n)

    def key(self):
        return tuple(v.key() for v in self.vertices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConvexPolygon):
            return NotImplemented
        return self.vertices == other.vertices

    def __hash__(self) -> int:
        return hash(self.vertices)

    def __repr__(self) -> str:
        pts = ", ".join(f"({v.x}, {v.y})" for v in self.vertices)
        return f"ConvexPolygon[{pts}]"


def polygon(points: Sequence[tuple]) -> ConvexPolygon:
    return ConvexPolygon([vec(x, y) for x, y in points])


_PRUNE_MARGIN = 1e-9


def _bbox_disjoint(p: ConvexPolygon, q: ConvexPolygon) -> bool:
    """Conservative float separation test: True only when clearly disjoint."""
    ax0, ay0, ax1, ay1 = p.fbbox
    bx0, by0, bx1, by1 = q.fbbox
    return (ax1 < bx0 - _PRUNE_MARGIN or bx1 < ax0 - _PRUNE_MARGIN
            or ay1 < by0 - _PRUNE_MARGIN or by1 < ay0 - _PRUNE_MARGIN)


def clip(poly: ConvexPolygon, plane: HalfPlane) -> Optional[ConvexPolygon]:
    """Exact intersection of a convex polygon with a half-plane.

    Returns None when the intersection has zero area (slivers dropped).
    """
    verts = poly.vertices
    vals = [plane.value(v) for v in verts]
    signs = [v.sign() for v in vals]
    if all(s <= 0 for s in signs):
        return poly
    if all(s >= 0 for s in signs):
        return None
    out: list[Vec2] = []
    n = len(verts)
    for i in range(n):
        j = (i + 1) % n
        vi, vj = verts[i], verts[j]
        si, sj = signs[i], signs[j]
        if si <= 0:
            out.append(vi)
        if (si < 0 < sj) or (sj < 0 < si):
            t = vals[i] / (vals[i] - vals[j])
            out.append(vi + (vj - vi).scale(t))
    try:
        return ConvexPolygon(out)
    except ValueError:
        return None


def convex_intersection(p: ConvexPolygon,
                        q: ConvexPolygon) -> Optional[ConvexPolygon]:
    if _bbox_disjoint(p, q):
        return None
    cur: Optional[ConvexPolygon] = p
    for plane in q.edge_halfplanes():
        cur = clip(cur, plane)
        if cur is None:
            return None
    return cur


def convex_difference(p: ConvexPolygon, q: ConvexPolygon) -> list[ConvexPolygon]:
    """p minus q as pairwise interior-disjoint convex pieces."""
    if _bbox_disjoint(p, q):
        return [p]
    pieces: list[ConvexPolygon] = []
    remaining: Optional[ConvexPolygon] = p
    for plane in q.edge_halfplanes():
        if remaining is None:
            break
        outside = clip(remaining, plane.complement())
        if outside is not None:
            pieces.append(outside)
        remaining = clip(remaining, plane)
    return pieces


class Region:
    """Finite union of interior-disjoint convex polygons."""

    __slots__ = ("parts", "_area", "_bbox")

    def __init__(self, parts: Iterable[ConvexPolygon] = (),
                 *, check_disjoint: bool = False) -> None:
        ps = sorted(parts, key=lambda p: p.key())
        self.parts = tuple(ps)
        self._area: Optional[Scalar] = None
        self._bbox = None
        if check_disjoint:
            bad = self.overlap_area()
            if not bad.is_zero():
                raise ValueError("region parts overlap with positive area")

    @staticmethod
    def empty() -> "Region":
        return Region(())

    @staticmethod
    def of(*polys: ConvexPolygon) -> "Region":
        return Region(polys)

    def is_empty(self) -> bool:
        return not self.parts

    @property
    def area(self) -> Scalar:
        if self._area is None:
            s = ZERO
            for p in self.parts:
                s = s + p.area
            self._area = s
        return self._area

    @property
    def bbox(self) -> Optional[tuple[Scalar, Scalar, Scalar, Scalar]]:
        if not self.parts:
            return None
        if self._bbox is None:
            boxes = [p.bbox for p in self.parts]
            self._bbox = (min(b[0] for b in boxes), min(b[1] for b in boxes),
                          max(b[2] for b in boxes), max(b[3] for b in boxes))
        return self._bbox

    def overlap_area(self) -> Scalar:
        s = ZERO
        for i in range(len(self.parts)):
            for j in range(i + 1, len(self.parts)):
                inter = convex_intersection(self.parts[i], self.parts[j])
                if inter is not None:
                    s = s + inter.area
        return s

    def locate(self, p: Vec2) -> Location:
        """Classify against the parts; points on any part edge (including
        internal chords between parts) count as boundary."""
        on_boundary = False
        for part in self.parts:
            loc = part.locate(p)
            if loc == "interior":
                return "interior"
            if loc == "boundary":
                on_boundary = True
        return "boundary" if on_boundary else "outside"

    def translate(self, v: Vec2) -> "Region":
        return apply_isometry(Isometry.translation(v), self)

    def key(self):
        return tuple(p.key() for p in self.parts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Region):
            return NotImplemented
        return self.parts == other.parts

    def __hash__(self) -> int:
        return hash(self.parts)

    def __repr__(self) -> str:
        return f"Region({len(self.parts)} parts, area={self.area})"


def region_of_points(points: Sequence[tuple]) -> Region:
    return Region.of(polygon(points))


def apply_isometry(iso: Isometry, r: Region) -> Region:
    parts = []
    flip = iso.det() == Scalar(-1)
    for p in r.parts:
        verts = [iso(v) for v in p.vertices]
        if flip:
            verts.reverse()
        parts.append(ConvexPolygon.from_valid(verts))
    return Region(parts)


def intersection(a: Region, b: Region) -> Region:
    parts = []
    for p in a.parts:
        for q in b.parts:
            inter = convex_intersection(p, q)
            if inter is not None:
                parts.append(inter)
    return Region(parts)


def difference(a: Region, b: Region) -> Region:
    parts = list(a.parts)
    for q in b.parts:
        nxt: list[ConvexPolygon] = []
        for p in parts:
            nxt.extend(convex_difference(p, q))
        parts = nxt
    return Region(parts)


def disjoint_union(a: Region, b: Region) -> Region:
    inter = intersection(a, b)
    if not inter.area.is_zero():
        raise ValueError(
            f"disjoint union inputs overlap with area {inter.area}")
    return Region(a.parts + b.parts)


def boolean(a: Region, b: Region, op: str) -> Region:
    if op == "difference":
        return difference(a, b)
    if op == "disjoint-union":
        return disjoint_union(a, b)
    raise ValueError(f"unknown boolean op: {op!r}")


def symmetric_difference_area(a: Region, b: Region) -> Scalar:
    return difference(a, b).area + difference(b, a).area


def equal_ae(a: Region, b: Region) -> bool:
    """Equality up to null sets: area of the symmetric difference is zero."""
    if a.area != b.area:
        return False
    return symmetric_difference_area(a, b).is_zero()


def clip_region(r: Region, plane: HalfPlane) -> Region:
    parts = []
    for p in r.parts:
        c = clip(p, plane)
        if c is not None:
            parts.append(c)
    return Region(parts)


def convex_hull(points: Sequence[Vec2]) -> ConvexPolygon:
    """Andrew monotone chain over exact coordinates."""
    pts = sorted(set(points), key=lambda v: v.key())
    if len(pts) < 3:
        raise ValueError("hull needs at least 3 distinct points")

    def half(seq):
        out: list[Vec2] = []
        for p in seq:
            while len(out) >= 2 and (out[-1] - out[-2]).cross(p - out[-1]).sign() <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return ConvexPolygon(lower[:-1] + upper[:-1])


def box_region(xmin, ymin, xmax, ymax) -> Region:
    return region_of_points([(xmin, ymin), (xmax, ymin), (xmax, ymax),
                             (xmin, ymax)])
