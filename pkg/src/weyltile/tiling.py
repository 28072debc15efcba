"""Congruence witnesses and tiling checks.

Witness verification is exact; the Monte Carlo multiplicity check and the
Fuglede orthonormality check are independent cross-checks so that sets
without a closed witness can still be tested. MC sampling is deterministic
per (seed, sample index): verdicts do not depend on evaluation order.
"""

from __future__ import annotations

import cmath
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .geometry import (ConvexPolygon, Isometry, Region, Vec2, apply_isometry,
                       convex_intersection, difference, equal_ae,
                       intersection)
from .groups import Lattice, dual_lattice, weyl_membership
from .roots import RootSystemData
from .scalar import Scalar, rat

Box = tuple[Scalar, Scalar, Scalar, Scalar]  # xmin, ymin, xmax, ymax

# float membership margin: values this close to a wall are re-resolved
# with exact arithmetic
_MARGIN = 1e-9


@dataclass(frozen=True)
class WitnessEntry:
    piece: Region
    isometry: Isometry


@dataclass(frozen=True)
class CongruenceWitness:
    """Finite realization of piecewise group congruence source -> target."""

    source: Region
    target: Region
    entries: tuple[WitnessEntry, ...]

    def inverted(self) -> "CongruenceWitness":
        entries = tuple(
            WitnessEntry(apply_isometry(e.isometry, e.piece),
                         e.isometry.inverse())
            for e in self.entries)
        return CongruenceWitness(self.target, self.source, entries)


@dataclass
class CongruenceReport:
    ok: bool
    failures: list[str] = field(default_factory=list)
    offending: Optional[Region] = None
    piece_area_total: Optional[Scalar] = None


def _check_partition(pieces: Sequence[Region], whole: Region,
                     label: str, report: CongruenceReport) -> None:
    total = Scalar(0)
    for i, piece in enumerate(pieces):
        total = total + piece.area
        extra = difference(piece, whole)
        if not extra.area.is_zero():
            report.ok = False
            report.failures.append(
                f"{label} piece {i} leaves the {label} region "
                f"(area {extra.area})")
            if report.offending is None:
                report.offending = extra
            return
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            over = intersection(pieces[i], pieces[j])
            if not over.area.is_zero():
                report.ok = False
                report.failures.append(
                    f"{label} pieces {i} and {j} overlap (area {over.area})")
                if report.offending is None:
                    report.offending = over
                return
    if total != whole.area:
        gap = whole.area - total
        report.ok = False
        report.failures.append(
            f"{label} pieces cover area {total}, expected {whole.area} "
            f"(gap {gap})")
        if report.offending is None:
            leftover = whole
            for piece in pieces:
                leftover = difference(leftover, piece)
            report.offending = leftover


def verify_congruence(witness: CongruenceWitness, *,
                      lattice: Optional[Lattice] = None,
                      root_system: Optional[RootSystemData] = None
                      ) -> CongruenceReport:
    """Exact verification of both partition invariants.

    Optionally also checks that every group element belongs to the given
    translation lattice or affine Weyl group.
    """
    report = CongruenceReport(ok=True)
    pieces = [e.piece for e in witness.entries]
    images = [apply_isometry(e.isometry, e.piece) for e in witness.entries]
    total = Scalar(0)
    for p in pieces:
        total = total + p.area
    report.piece_area_total = total
    if witness.source.area != witness.target.area:
        report.ok = False
        report.failures.append("source and target areas differ")
    _check_partition(pieces, witness.source, "source", report)
    if report.ok:
        _check_partition(images, witness.target, "target", report)
    if lattice is not None:
        for i, e in enumerate(witness.entries):
            if not e.isometry.is_translation() or not lattice.contains(e.isometry.t):
                report.ok = False
                report.failures.append(
                    f"entry {i} is not a translation from the lattice")
    if root_system is not None:
        for i, e in enumerate(witness.entries):
            if not weyl_membership(e.isometry, root_system):
                report.ok = False
                report.failures.append(
                    f"entry {i} is not an affine Weyl element")
    return report


GroupSpec = Union[Lattice, RootSystemData]


def _lattice_elements(lat: Lattice, bound: int) -> list[Isometry]:
    coeffs = sorted(
        ((m, n) for m in range(-bound, bound + 1)
         for n in range(-bound, bound + 1)),
        key=lambda mn: (abs(mn[0]) + abs(mn[1]), mn))
    return [Isometry.translation(lat.point(m, n)) for m, n in coeffs]


def _affine_weyl_elements(rs: RootSystemData, word_bound: int) -> list[Isometry]:
    """Distinct products of at most word_bound alcove-wall reflections."""
    from .groups import affine_reflection

    gens = [affine_reflection(w.root, w.k) for w in rs.walls]
    seen = {Isometry.identity().key(): Isometry.identity()}
    order: list[Isometry] = [Isometry.identity()]
    frontier = [Isometry.identity()]
    for _ in range(word_bound):
        nxt = []
        for w in frontier:
            for g in gens:
                wg = g.compose(w)
                if wg.key() not in seen:
                    seen[wg.key()] = wg
                    nxt.append(wg)
                    order.append(wg)
        frontier = nxt
    return order


def search_congruence(source: Region, target: Region, group: GroupSpec,
                      bound: int) -> Optional[CongruenceWitness]:
    """Greedy brute-force witness search over bounded group elements.

    Elements are enumerated by word length (affine Weyl) or coefficient
    size (lattice); each element takes the whole overlap of the remaining
    source with the preimage of the remaining target. A returned witness
    always re-verifies; None is not a proof of non-congruence.
    """
    if source.area != target.area:
        return None
    if isinstance(group, Lattice):
        elements = _lattice_elements(group, bound)
    else:
        elements = _affine_weyl_elements(group, bound)
    left_src = source
    left_tgt = target
    entries: list[WitnessEntry] = []
    for g in elements:
        if left_src.is_empty() or left_src.area.is_zero():
            break
        pre = apply_isometry(g.inverse(), left_tgt)
        piece = intersection(left_src, pre)
        if piece.area.is_zero():
            continue
        entries.append(WitnessEntry(piece, g))
        left_src = difference(left_src, piece)
        left_tgt = difference(left_tgt, apply_isometry(g, piece))
    if not left_src.area.is_zero() or not left_tgt.area.is_zero():
        return None
    witness = CongruenceWitness(source, target, tuple(entries))
    if not verify_congruence(witness).ok:
        return None
    return witness


@dataclass(frozen=True)
class TilingReport:
    samples_tested: int
    multiplicity_histogram: dict[int, int]
    boundary_hits: int
    verdict: str                 # "pass" | "fail"
    seed: int

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_jsonable(self) -> dict:
        return {
            "samples": self.samples_tested,
            "histogram": {str(k): v for k, v in
                          sorted(self.multiplicity_histogram.items())},
            "boundary": self.boundary_hits,
            "verdict": self.verdict,
            "seed": self.seed,
        }


def _sample_fractions(seed: int, count: int) -> list[tuple[Fraction, Fraction]]:
    """Deterministic dyadic samples; sample i depends only on (seed, i)."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        x = Fraction(rng.getrandbits(53), 1 << 53)
        y = Fraction(rng.getrandbits(53), 1 << 53)
        out.append((x, y))
    return out


class _FloatRegion:
    """Vectorized membership test with exact fallback flagging.

    Each convex part is a stack of edge functions A x + B y + C, all >= 0
    inside. Points within _MARGIN of any edge of a part whose other edges
    do not clearly exclude the point are flagged for exact resolution.
    """

    def __init__(self, region: Region) -> None:
        self.region = region
        self.parts = []
        for part in region.parts:
            rows = []
            verts = part.vertices
            n = len(verts)
            for i in range(n):
                a, b = verts[i], verts[(i + 1) % n]
                ax, ay = float(a.x), float(a.y)
                bx, by = float(b.x), float(b.y)
                # inside: (b - a) x (p - a) >= 0
                rows.append((-(by - ay), bx - ax,
                             (by - ay) * ax - (bx - ax) * ay))
            self.parts.append(np.array(rows, dtype=float))

    def classify(self, px: np.ndarray, py: np.ndarray
                 ) -> tuple[np.ndarray, np.ndarray]:
        """Returns (inside, unsure) boolean arrays for point membership."""
        inside = np.zeros(px.shape, dtype=bool)
        unsure = np.zeros(px.shape, dtype=bool)
        for rows in self.parts:
            vals = (rows[:, 0:1] * px[None, :] + rows[:, 1:2] * py[None, :]
                    + rows[:, 2:3])
            mn = vals.min(axis=0)
            part_in = mn > _MARGIN
            part_unsure = np.abs(mn) <= _MARGIN
            inside |= part_in
            unsure |= part_unsure
        return inside, unsure & ~inside


def _count_lattice_exact(region: Region, lat: Lattice, p: Vec2,
                         offsets: list[tuple[int, int]]
                         ) -> tuple[int, bool]:
    """Exact translate-multiplicity of one point; bool flags boundary."""
    from .groups import lattice_reduce

    rep, _ = lattice_reduce(p, lat)
    count = 0
    boundary = False
    for m, n in offsets:
        q = rep - lat.point(m, n)
        loc = region.locate(q)
        if loc == "interior":
            count += 1
        elif loc == "boundary":
            boundary = True
    return count, boundary


def _cell_offsets(region: Region, lat: Lattice) -> list[tuple[int, int]]:
    """Lattice offsets o such that (base cell + lat[o]) can meet the region.

    After reducing a point into the base cell, its translates q = rep - lat[o]
    cover every lattice translate that could land in the region.
    """
    bbox = region.bbox
    if bbox is None:
        return []
    xmin, ymin, xmax, ymax = bbox
    corners = [Vec2(xmin, ymin), Vec2(xmax, ymin), Vec2(xmax, ymax),
               Vec2(xmin, ymax)]
    coords = [lat.coords(c) for c in corners]
    s_vals = [s for s, _ in coords]
    t_vals = [t for _, t in coords]
    s_lo = min(v.floor() for v in s_vals) - 1
    s_hi = max(v.floor() for v in s_vals) + 1
    t_lo = min(v.floor() for v in t_vals) - 1
    t_hi = max(v.floor() for v in t_vals) + 1
    return [(-m, -n) for m in range(s_lo, s_hi + 1)
            for n in range(t_lo, t_hi + 1)]


def mc_tiling_multiplicity(region: Region, group: GroupSpec, samples: int,
                           seed: int, box: Box) -> TilingReport:
    """Seeded multiplicity check of the tiling property inside a box.

    Lattice mode counts translates covering each sample; affine mode counts
    the points of the sample's full orbit {w x + gamma} that land in the
    region, which equals the fold-then-enumerate count since the orbit of
    the folded representative is the same set. Samples that touch any
    boundary exactly are excluded from the verdict and reported.
    """
    xmin, ymin, xmax, ymax = box
    raw = _sample_fractions(seed, samples)
    wx = xmax - xmin
    wy = ymax - ymin

    if isinstance(group, Lattice):
        lat = group
        weyl: list[Isometry] = [Isometry.identity()]
    else:
        lat = Lattice(*group.coroot_lattice_basis)
        weyl = list(group.weyl_group)

    offsets = _cell_offsets(region, lat)
    tester = _FloatRegion(region)

    # exact sample coordinates and their float images (dyadic: both exact)
    pts = [(Scalar(fx) * wx + xmin, Scalar(fy) * wy + ymin)
           for fx, fy in raw]
    px = np.array([float(p[0]) for p in pts])
    py = np.array([float(p[1]) for p in pts])

    bu = (float(lat.u.x), float(lat.u.y))
    bv = (float(lat.v.x), float(lat.v.y))
    det = bu[0] * bv[1] - bu[1] * bv[0]

    counts = np.zeros(samples, dtype=np.int64)
    unsure_any = np.zeros(samples, dtype=bool)
    for w in weyl:
        m = [[float(w.m00), float(w.m01)], [float(w.m10), float(w.m11)]]
        qx = m[0][0] * px + m[0][1] * py
        qy = m[1][0] * px + m[1][1] * py
        # reduce into the base cell of the lattice
        s = (qx * bv[1] - qy * bv[0]) / det
        t = (bu[0] * qy - bu[1] * qx) / det
        fs = np.floor(s)
        ft = np.floor(t)
        rx = qx - (fs * bu[0] + ft * bv[0])
        ry = qy - (fs * bu[1] + ft * bv[1])
        near_cell_edge = (np.minimum(s - fs, 1.0 - (s - fs)) < _MARGIN) | \
                         (np.minimum(t - ft, 1.0 - (t - ft)) < _MARGIN)
        unsure_any |= near_cell_edge
        for om, on in offsets:
            ox = rx - (om * bu[0] + on * bv[0])
            oy = ry - (om * bu[1] + on * bv[1])
            inside, unsure = tester.classify(ox, oy)
            counts += inside
            unsure_any |= unsure

    histogram: dict[int, int] = {}
    boundary_hits = 0
    tested = 0
    ok = True
    for i in range(samples):
        if unsure_any[i]:
            count, boundary = _orbit_count_exact(
                region, weyl, lat, offsets,
                Vec2(pts[i][0], pts[i][1]))
        else:
            count, boundary = int(counts[i]), False
        if boundary:
            boundary_hits += 1
            continue
        tested += 1
        histogram[count] = histogram.get(count, 0) + 1
        if count != 1:
            ok = False
    return TilingReport(
        samples_tested=samples,
        multiplicity_histogram=histogram,
        boundary_hits=boundary_hits,
        verdict="pass" if ok else "fail",
        seed=seed,
    )


def _orbit_count_exact(region: Region, weyl: Sequence[Isometry],
                       lat: Lattice, offsets: list[tuple[int, int]],
                       p: Vec2) -> tuple[int, bool]:
    from .groups import lattice_reduce

    count = 0
    boundary = False
    for w in weyl:
        q = w(p)
        rep, _ = lattice_reduce(q, lat)
        for om, on in offsets:
            cand = rep - lat.point(om, on)
            loc = region.locate(cand)
            if loc == "interior":
                count += 1
            elif loc == "boundary":
                boundary = True
    return count, boundary


# -- Fuglede orthonormality (Gram) check ----------------------------------


def _eit_minus_1_over_it(t: float) -> complex:
    """(e^{it} - 1) / (it), stable near t = 0."""
    if abs(t) < 1e-5:
        return complex(1 - t * t / 6, t / 2 - t ** 3 / 24)
    z = cmath.exp(1j * t) - 1
    return z / complex(0, t)


def _simplex_phase_integral(a: float, b: float) -> complex:
    """Integral of e^{i(au+bv)} over the unit simplex u,v>=0, u+v<=1."""
    if abs(a) < abs(b):
        a, b = b, a
    if abs(a) < 1e-4:
        # both tiny: quartic Taylor, remainder < 1e-17
        re = 0.5 - (a * a + a * b + b * b) / 24
        im = (a + b) / 6 - (a ** 3 + a * a * b + a * b * b + b ** 3) / 120
        return complex(re, im)
    # F(a, b) = [e^{ia} E1(b - a) - E1(b)] / (ia) with E1(t) = (e^{it}-1)/(it);
    # |a| >= |b| keeps the divisor well away from 0
    ea = cmath.exp(1j * a)
    return (ea * _eit_minus_1_over_it(b - a) - _eit_minus_1_over_it(b)) / (1j * a)


def _triangle_exponential_integral(w: tuple[float, float],
                                   p0: tuple[float, float],
                                   p1: tuple[float, float],
                                   p2: tuple[float, float]) -> complex:
    """Closed-form integral of e^{2 pi i <w, x>} over a triangle."""
    e1 = (p1[0] - p0[0], p1[1] - p0[1])
    e2 = (p2[0] - p0[0], p2[1] - p0[1])
    det = e1[0] * e2[1] - e1[1] * e2[0]
    if det == 0.0:
        raise ValueError("degenerate triangle in exponential integration")
    tau = 2.0 * cmath.pi
    a = tau * (w[0] * e1[0] + w[1] * e1[1])
    b = tau * (w[0] * e2[0] + w[1] * e2[1])
    phase = cmath.exp(1j * tau * (w[0] * p0[0] + w[1] * p0[1]))
    return det * phase * _simplex_phase_integral(a, b)


def _region_exponential_integral(region: Region,
                                 w: tuple[float, float]) -> complex:
    total = 0j
    for part in region.parts:
        verts = [(float(v.x), float(v.y)) for v in part.vertices]
        for i in range(1, len(verts) - 1):
            total += _triangle_exponential_integral(
                w, verts[0], verts[i], verts[i + 1])
    return total


def dual_frequencies(lat: Lattice, count: int) -> list[Vec2]:
    """First `count` dual-lattice vectors sorted by norm, deterministically."""
    dual = dual_lattice(lat)
    # any vector with a coefficient beyond `bound` has norm at least
    # (bound + 1) * line_gap, where line_gap is the smaller distance
    # between adjacent lattice lines
    norm_u = float(dual.u.norm_sq()) ** 0.5
    norm_v = float(dual.v.norm_sq()) ** 0.5
    line_gap = abs(float(dual.det)) / max(norm_u, norm_v)
    bound = 3
    while True:
        pts = [dual.point(m, n) for m in range(-bound, bound + 1)
               for n in range(-bound, bound + 1)]
        pts.sort(key=lambda v: (float(v.norm_sq()), float(v.x), float(v.y)))
        if len(pts) >= count:
            kth_norm = float(pts[count - 1].norm_sq()) ** 0.5
            if kth_norm <= (bound + 1) * line_gap:
                return pts[:count]
        bound *= 2


def fuglede_gram_deviation(region: Region, lat: Lattice, frequencies: int,
                           precision_bits: int = 53) -> float:
    """Max |G - I| entry for the exponential system of the dual lattice.

    G[j,k] integrates e^{2 pi i <s_j - s_k, x>} over the region by
    closed-form per-triangle antiderivatives, normalized by the exact area.
    For a region that tiles under the lattice this is the identity matrix
    up to quadrature precision.
    """
    del precision_bits  # evaluation is 64-bit; kept for interface clarity
    freqs = dual_frequencies(lat, frequencies)
    area = float(region.area)
    worst = 0.0
    for j in range(len(freqs)):
        for k in range(len(freqs)):
            w = freqs[j] - freqs[k]
            wf = (float(w.x), float(w.y))
            if j == k:
                val = 1.0 + 0j
            else:
                val = _region_exponential_integral(region, wf) / area
            target = 1.0 if j == k else 0.0
            worst = max(worst, abs(val - target))
    return worst
