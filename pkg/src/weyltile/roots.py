"""Rank-2 root systems, Weyl groups, coroot lattices, fundamental alcoves.

The four systems are table-driven: only four rank-2 cases exist and the
constructions downstream depend on bit-exact coordinates, so generating
them from Cartan data would only add failure modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .geometry import ConvexPolygon, HalfPlane, Isometry, V_ZERO, Vec2, vec
from .scalar import ONE, SQRT2, SQRT3, SQRT6, ZERO, Scalar, rat

SYSTEM_NAMES = ("A1xA1", "A2", "B2", "G2")


def coroot(r: Vec2) -> Vec2:
    """2r / <r, r>."""
    if r.is_zero():
        raise ValueError("coroot of the zero vector is undefined")
    return r.scale(Scalar(2) / r.norm_sq())


def reflection(r: Vec2) -> Isometry:
    """Linear reflection about the hyperplane orthogonal to r."""
    if r.is_zero():
        raise ValueError("reflection needs a nonzero root")
    n2 = r.norm_sq()
    two = Scalar(2)
    lin = (
        (ONE - two * r.x * r.x / n2, -two * r.x * r.y / n2),
        (-two * r.x * r.y / n2, ONE - two * r.y * r.y / n2),
    )
    return Isometry(lin, V_ZERO)


@dataclass(frozen=True)
class AlcoveWall:
    """Wall H_{root,k} of the alcove, with the alcove on the given side.

    side=+1 means the alcove satisfies <x, root> >= k, side=-1 means <= k.
    """

    root: Vec2
    k: int
    side: int

    def halfplane(self) -> HalfPlane:
        # alcove side expressed as {<p, n> <= c}
        if self.side > 0:
            return HalfPlane(-self.root, Scalar(-self.k))
        return HalfPlane(self.root, Scalar(self.k))

    def violated(self, p: Vec2) -> bool:
        return self.halfplane().value(p).sign() > 0


@dataclass(frozen=True)
class RootSystemData:
    name: str
    roots: tuple[Vec2, ...]
    simple_roots: tuple[Vec2, Vec2]
    positive_roots: tuple[Vec2, ...]
    highest_root: Optional[Vec2]
    coroots: tuple[Vec2, ...]
    weyl_group: tuple[Isometry, ...]
    coroot_lattice_basis: tuple[Vec2, Vec2]
    alcove: ConvexPolygon
    walls: tuple[AlcoveWall, ...]
    notes: tuple[str, ...] = ()

    @property
    def weyl_order(self) -> int:
        return len(self.weyl_group)


@dataclass
class RootSystemReport:
    spans_plane: bool
    plus_minus_pairs: bool
    reflection_closed: bool
    integral_pairings: bool
    angle_constraint: bool

    @property
    def ok(self) -> bool:
        return (self.spans_plane and self.plus_minus_pairs
                and self.reflection_closed and self.integral_pairings
                and self.angle_constraint)


def validate_root_system(roots: Sequence[Vec2]) -> RootSystemReport:
    """Check the root-system axioms, reporting pass/fail per axiom."""
    roots = list(roots)
    if not roots or any(r.is_zero() for r in roots):
        return RootSystemReport(False, False, False, False, False)
    root_set = {(r.x, r.y) for r in roots}

    spans = any(roots[i].cross(roots[j]).sign() != 0
                for i in range(len(roots)) for j in range(i + 1, len(roots)))

    pairs = True
    for r in roots:
        if (-r.x, -r.y) not in root_set:
            pairs = False
        for s in roots:
            if r.cross(s).is_zero() and s != r and s != -r:
                pairs = False

    closed = True
    for r in roots:
        rho = reflection(r)
        for s in roots:
            img = rho(s)
            if (img.x, img.y) not in root_set:
                closed = False

    integral = True
    angles = True
    for r in roots:
        rv = coroot(r)
        for s in roots:
            if not s.dot(rv).is_integer():
                integral = False
            four_cos_sq = (Scalar(4) * s.dot(r) * s.dot(r)
                           / (r.norm_sq() * s.norm_sq()))
            if not four_cos_sq.is_integer():
                angles = False

    return RootSystemReport(spans, pairs, closed, integral, angles)


def enumerate_weyl_group(simple_roots: Sequence[Vec2],
                         bound: int = 64) -> list[Isometry]:
    """Closure of the simple reflections under composition.

    Raises if more than `bound` distinct elements appear, which signals
    input that does not generate a finite group.
    """
    gens = [reflection(r) for r in simple_roots]
    if len(simple_roots) < 2 or simple_roots[0].cross(simple_roots[1]).is_zero():
        raise ValueError("simple roots must span the plane")
    seen = {Isometry.identity().key(): Isometry.identity()}
    frontier = [Isometry.identity()]
    while frontier:
        nxt = []
        for w in frontier:
            for g in gens:
                wg = g.compose(w)
                if wg.key() not in seen:
                    seen[wg.key()] = wg
                    nxt.append(wg)
                    if len(seen) > bound:
                        raise ValueError(
                            "group generated by the given roots exceeds "
                            f"{bound} elements; not a finite Weyl group")
        frontier = nxt
    return sorted(seen.values(), key=lambda w: w.key())


def _half(s: Scalar) -> Scalar:
    return s / 2


def _freeze(name: str, simple: tuple[Vec2, Vec2],
            positive: list[Vec2], highest: Optional[Vec2],
            lattice_basis: tuple[Vec2, Vec2],
            alcove_pts: list[Vec2], walls: list[AlcoveWall],
            notes: tuple[str, ...] = ()) -> RootSystemData:
    roots = tuple(positive) + tuple(-r for r in positive)
    coroots = tuple(coroot(r) for r in roots)
    weyl = tuple(enumerate_weyl_group(simple))
    return RootSystemData(
        name=name,
        roots=roots,
        simple_roots=simple,
        positive_roots=tuple(positive),
        highest_root=highest,
        coroots=coroots,
        weyl_group=weyl,
        coroot_lattice_basis=lattice_basis,
        alcove=ConvexPolygon(alcove_pts),
        walls=tuple(walls),
        notes=notes,
    )


def _build_a1xa1() -> RootSystemData:
    e1 = vec(1, 0)
    e2 = vec(0, 1)
    # reducible case: no highest root; the alcove is the unit square and
    # its four walls carry the affine structure per factor
    walls = [
        AlcoveWall(e1, 0, +1),
        AlcoveWall(e2, 0, +1),
        AlcoveWall(e1, 1, -1),
        AlcoveWall(e2, 1, -1),
    ]
    return _freeze(
        "A1xA1", (e1, e2), [e1, e2], None,
        (vec(2, 0), vec(0, 2)),
        [vec(0, 0), vec(1, 0), vec(1, 1), vec(0, 1)],
        walls,
    )


def _build_a2() -> RootSystemData:
    alpha = Vec2(SQRT2, ZERO)
    beta = Vec2(-_half(SQRT2), _half(SQRT6))
    highest = alpha + beta
    positive = [alpha, beta, highest]
    walls = [
        AlcoveWall(alpha, 0, +1),
        AlcoveWall(beta, 0, +1),
        AlcoveWall(highest, 1, -1),
    ]
    return _freeze(
        "A2", (alpha, beta), positive, highest,
        (alpha, beta),
        [Vec2(ZERO, ZERO), Vec2(_half(SQRT2), SQRT6 / 6), Vec2(ZERO, SQRT6 / 3)],
        walls,
    )


def _build_b2() -> RootSystemData:
    alpha = vec(1, -1)
    beta = vec(0, 1)
    highest = vec(1, 1)
    positive = [vec(1, 0), beta, highest, alpha]
    walls = [
        AlcoveWall(alpha, 0, +1),
        AlcoveWall(beta, 0, +1),
        AlcoveWall(highest, 1, -1),
    ]
    return _freeze(
        "B2", (alpha, beta), positive, highest,
        (coroot(alpha), highest),
        [vec(0, 0), vec(1, 0), vec(Fraction(1, 2), Fraction(1, 2))],
        walls,
    )


def _build_g2() -> RootSystemData:
    alpha = Vec2(SQRT2, ZERO)
    beta = Vec2(-SQRT2 * rat(3, 2), _half(SQRT6))
    positive = [
        alpha,
        beta,
        alpha + beta,
        alpha.scale(2) + beta,
        alpha.scale(3) + beta,
        alpha.scale(3) + beta.scale(2),
    ]
    highest = positive[-1]  # (0, sqrt6)
    walls = [
        AlcoveWall(alpha, 0, +1),
        AlcoveWall(beta, 0, +1),
        AlcoveWall(highest, 1, -1),
    ]
    return _freeze(
        "G2", (alpha, beta), positive, highest,
        (coroot(alpha.scale(3) + beta), coroot(highest)),
        [Vec2(ZERO, ZERO), Vec2(SQRT2 / 6, SQRT6 / 6), Vec2(ZERO, SQRT6 / 6)],
        walls,
        notes=("long-root list entry normalized to 2e3 - e1 - e2 "
               "(orbit symmetry fixes an obvious misprint in the source data)",),
    )


_BUILDERS = {
    "A1xA1": _build_a1xa1,
    "A2": _build_a2,
    "B2": _build_b2,
    "G2": _build_g2,
}

_CACHE: dict[str, RootSystemData] = {}


def normalize_name(name: str) -> str:
    flat = name.replace("_", "").replace("x", "x").strip().lower()
    aliases = {"a1xa1": "A1xA1", "a1a1": "A1xA1", "a2": "A2", "b2": "B2",
               "g2": "G2"}
    if flat not in aliases:
        raise ValueError(f"unknown root system {name!r}; "
                         f"expected one of {SYSTEM_NAMES}")
    return aliases[flat]


def build_root_system(name: str) -> RootSystemData:
    key = normalize_name(name)
    if key not in _CACHE:
        _CACHE[key] = _BUILDERS[key]()
    return _CACHE[key]
