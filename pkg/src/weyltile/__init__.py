"""Exact constructions and checks for rank-2 three-way tiling sets."""

from .scalar import ONE, SQRT2, SQRT3, SQRT6, ZERO, Scalar, rat
from .geometry import (ConvexPolygon, HalfPlane, Isometry, Region, Vec2,
                       apply_isometry, boolean, box_region, clip,
                       convex_hull, difference, disjoint_union, equal_ae,
                       intersection, polygon, region_of_points, vec)
from .roots import (RootSystemData, RootSystemReport, build_root_system,
                    coroot, enumerate_weyl_group, reflection,
                    validate_root_system)
from .groups import (FoldResult, Lattice, LatticeIntersection,
                     affine_reflection, dual_lattice, fold, lattice_reduce,
                     lattice_intersection, weyl_membership)

__all__ = [name for name in dir() if not name.startswith("_")]
