"""Boundary masks, dielectric maps and scene descriptions.

A conductor surface is a union of axis-aligned faces.  Each face is a 3D
sublattice of sites; freezing all links tangential to the face (every
direction except the face normal) imposes the ideal-conductor condition
on that face.  Links shared by two faces are frozen once (set semantics).

A grating is a solid comb: a base plane spanning the whole lattice at
``base_z`` plus rectangular teeth of height H.  Only the boundary surface
is frozen -- base plane, tooth tops, and vertical tooth flanks.  Tooth
interiors are left free: they form closed conducting boxes whose energy
is identical in the full scene and in the single-body scene, so it drops
out of the interaction-energy subtraction.

Plate pairs may close through the periodic z boundary: ``z_high == nz``
denotes two plates glued back to back through the wrap, realized by the
single frozen sublattice at ``z_low``.  This leaves a single cavity of
width ``z_high - z_low`` and no spectator region behind the plates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .lattice import NDIR, Z, LatticeError, LatticeShape, SimulationParams


class GeometryError(ValueError):
    """Body does not fit the lattice or bodies interpenetrate."""


# ---------------------------------------------------------------------------
# masks


class BoundaryMask:
    """Set of links frozen at zero, stored as a boolean (4, *dims) array."""

    def __init__(self, shape: LatticeShape, frozen: np.ndarray | None = None):
        self.shape = shape
        if frozen is None:
            frozen = np.zeros((NDIR,) + shape.dims, dtype=bool)
        if frozen.shape != (NDIR,) + shape.dims:
            raise LatticeError("mask array does not match lattice shape")
        self.frozen = frozen

    def __or__(self, other: "BoundaryMask") -> "BoundaryMask":
        if other.shape != self.shape:
            raise LatticeError("cannot union masks of different lattices")
        return BoundaryMask(self.shape, self.frozen | other.frozen)

    def __eq__(self, other) -> bool:
        return (isinstance(other, BoundaryMask)
                and self.shape == other.shape
                and bool(np.array_equal(self.frozen, other.frozen)))

    def __len__(self) -> int:
        return int(np.count_nonzero(self.frozen))

    def freeze_face(self, normal: int, coord: int,
                    spans: dict[int, tuple[int, int]] | None = None) -> None:
        """Freeze all tangential links of one axis-aligned face.

        The face is the site sublattice ``{axis normal} == coord``,
        restricted to half-open site ranges ``spans[axis] = (lo, hi)``
        along any other axes (periodic; hi may exceed the extent).  Links
        pointing along an in-face axis are frozen only when both their
        endpoints lie in the face, so their range along that axis is
        ``(lo, hi - 1)``.
        """
        dims = self.shape.dims
        coord %= dims[normal]
        spans = spans or {}
        for direction in range(NDIR):
            if direction == normal:
                continue
            sel = np.ones(dims[:normal] + dims[normal + 1:], dtype=bool)
            axes_left = [a for a in range(NDIR) if a != normal]
            ok = True
            for axis, (lo, hi) in spans.items():
                if axis == normal:
                    continue
                span_hi = hi - 1 if axis == direction else hi
                marker = np.zeros(dims[axis], dtype=bool)
                if span_hi <= lo:
                    ok = False
                    break
                marker[np.arange(lo, span_hi) % dims[axis]] = True
                shape_b = [1] * (NDIR - 1)
                shape_b[axes_left.index(axis)] = dims[axis]
                sel &= marker.reshape(shape_b)
            if not ok:
                continue
            take: list[slice | int] = [slice(None)] * NDIR
            take[normal] = coord
            self.frozen[direction][tuple(take)] |= sel

    def translated_x(self, steps: int) -> "BoundaryMask":
        """Mask shifted by an integer number of x steps (periodic)."""
        return BoundaryMask(self.shape, np.roll(self.frozen, steps, axis=1))

    def reflected_x(self) -> "BoundaryMask":
        """Mask under x -> -x (site reflection; x links re-anchored)."""
        flipped = np.flip(self.frozen, axis=1)
        out = flipped.copy()
        # an x link from site x to x+1 maps to the link from -x-1 to -x
        out[0] = np.roll(flipped[0], -1, axis=0)
        return BoundaryMask(self.shape, out)


# ---------------------------------------------------------------------------
# body specs


@dataclass(frozen=True)
class Plate:
    """Single conducting plane normal to z (self-energy scenes)."""

    z: int


@dataclass(frozen=True)
class PlatePairSpec:
    """Two conducting planes normal to z at z_low and z_high.

    z_high == nz is the glued pair: both planes coincide through the
    periodic wrap and are realized by one frozen sublattice.
    """

    z_low: int
    z_high: int

    def validate(self, shape: LatticeShape) -> None:
        if not (0 <= self.z_low < self.z_high <= shape.nz):
            raise GeometryError(
                f"plate pair ({self.z_low}, {self.z_high}) does not fit nz={shape.nz}"
            )

    @property
    def separation(self) -> int:
        return self.z_high - self.z_low


@dataclass(frozen=True)
class GratingSpec:
    """Rectangular comb: base plane plus equally spaced teeth.

    Teeth repeat with period ``tooth_width + gap_width`` along x.  A tooth
    spans sites [shift + k*period, shift + k*period + tooth_width] at the
    tooth-top plane; its two flanks sit at the ends of that span.
    ``orientation`` is +1 for teeth pointing toward +z, -1 toward -z.
    ``tooth_height == 0`` degenerates to a flat plate at base_z.
    """

    tooth_width: int
    gap_width: int
    tooth_height: int
    base_z: int
    orientation: int = +1
    shift: int = 0

    def __post_init__(self):
        if self.tooth_width < 1 or self.gap_width < 1:
            raise GeometryError("tooth and gap widths must be >= 1")
        if self.tooth_height < 0:
            raise GeometryError("tooth height must be >= 0")
        if self.orientation not in (+1, -1):
            raise GeometryError("orientation must be +1 or -1")

    @property
    def period(self) -> int:
        return self.tooth_width + self.gap_width

    @property
    def tooth_top_z(self) -> int:
        return self.base_z + self.orientation * self.tooth_height

    def validate(self, shape: LatticeShape) -> None:
        if shape.nx % self.period != 0:
            raise GeometryError(
                f"tooth period {self.period} must divide nx={shape.nx}"
            )
        if self.tooth_height >= shape.nz:
            raise GeometryError("teeth taller than the lattice")

    def with_shift(self, shift: int) -> "GratingSpec":
        return replace(self, shift=shift)


@dataclass(frozen=True)
class DielectricSlab:
    """Axis-aligned box of permittivity epsilon >= 1 (half-open ranges).

    Ranges are (lo, hi) site ranges per spatial axis; None spans the whole
    extent.  The slab is uniform in Euclidean time.
    """

    epsilon: float
    x_range: tuple[int, int] | None = None
    y_range: tuple[int, int] | None = None
    z_range: tuple[int, int] | None = None

    def __post_init__(self):
        if self.epsilon < 1.0:
            raise GeometryError(f"epsilon must be >= 1, got {self.epsilon}")

    def ranges(self, shape: LatticeShape):
        full = [(0, shape.nx), (0, shape.ny), (0, shape.nz)]
        given = [self.x_range, self.y_range, self.z_range]
        out = []
        for (lo_full, hi_full), rng in zip(full, given):
            if rng is None:
                out.append((lo_full, hi_full))
            else:
                lo, hi = rng
                if not (lo_full <= lo < hi <= hi_full):
                    raise GeometryError(f"slab range {rng} outside lattice")
                out.append((lo, hi))
        return out


Body = Plate | PlatePairSpec | GratingSpec | DielectricSlab


@dataclass(frozen=True)
class SceneSpec:
    """One experiment: lattice, couplings, and the interacting bodies.

    ``lateral_shift`` is added to the shift of the second grating body,
    which is how a lateral sweep is expressed without rebuilding specs.
    """

    shape: LatticeShape
    params: SimulationParams
    bodies: tuple[Body, ...] = ()
    lateral_shift: int = 0

    def body_list(self) -> tuple[Body, ...]:
        if self.lateral_shift == 0:
            return self.bodies
        out = []
        gratings_seen = 0
        for body in self.bodies:
            if isinstance(body, GratingSpec):
                gratings_seen += 1
                if gratings_seen == 2:
                    body = body.with_shift(body.shift + self.lateral_shift)
            out.append(body)
        return tuple(out)

    def fingerprint_text(self) -> str:
        parts = [repr(self.shape), repr(self.params)]
        parts += [repr(b) for b in self.body_list()]
        return "|".join(parts)


# ---------------------------------------------------------------------------
# mask builders


def build_plate_mask(z: int, shape: LatticeShape) -> BoundaryMask:
    """Single conducting plane normal to z: freeze x, y, t links at z."""
    mask = BoundaryMask(shape)
    mask.freeze_face(normal=Z, coord=z % shape.nz)
    return mask


def build_plate_pair_mask(spec: PlatePairSpec, shape: LatticeShape) -> BoundaryMask:
    """Mask of two plates; the glued pair collapses to one sublattice."""
    spec.validate(shape)
    mask = build_plate_mask(spec.z_low, shape)
    if spec.z_high < shape.nz:
        mask = mask | build_plate_mask(spec.z_high, shape)
    return mask


def build_grating_mask(spec: GratingSpec, shape: LatticeShape) -> BoundaryMask:
    """Boundary surface of one solid grating.

    Faces: the base plane over all x, one tooth-top face per tooth, and
    two flanks per tooth carrying y, z, t links over the tooth height.
    """
    spec.validate(shape)
    mask = BoundaryMask(shape)
    mask.freeze_face(normal=Z, coord=spec.base_z % shape.nz)
    if spec.tooth_height == 0:
        return mask
    z_lo = min(spec.base_z, spec.tooth_top_z)
    z_hi = max(spec.base_z, spec.tooth_top_z)
    for x0 in range(spec.shift % spec.period, shape.nx, spec.period):
        mask.freeze_face(normal=Z, coord=spec.tooth_top_z % shape.nz,
                         spans={0: (x0, x0 + spec.tooth_width + 1)})
        for flank_x in (x0, x0 + spec.tooth_width):
            mask.freeze_face(normal=0, coord=flank_x % shape.nx,
                             spans={Z: (z_lo, z_hi + 1)})
    return mask


def _grating_solid_sites(spec: GratingSpec, shape: LatticeShape) -> np.ndarray:
    """(x, z) sites on or inside the solid body: base plane plus teeth."""
    solid = np.zeros((shape.nx, shape.nz), dtype=bool)
    solid[:, spec.base_z % shape.nz] = True
    for x0 in range(spec.shift % spec.period, shape.nx, spec.period):
        xs = np.arange(x0, x0 + spec.tooth_width + 1) % shape.nx
        lo = min(spec.base_z, spec.tooth_top_z)
        hi = max(spec.base_z, spec.tooth_top_z)
        zs = np.arange(lo, hi + 1) % shape.nz
        solid[np.ix_(xs, zs)] = True
    return solid


def _grating_interior_sites(spec: GratingSpec, shape: LatticeShape) -> np.ndarray:
    """Strictly interior (x, z) sites of the teeth, excluding all faces."""
    inner = np.zeros((shape.nx, shape.nz), dtype=bool)
    if spec.tooth_height < 2 or spec.tooth_width < 2:
        return inner
    for x0 in range(spec.shift % spec.period, shape.nx, spec.period):
        xs = np.arange(x0 + 1, x0 + spec.tooth_width) % shape.nx
        lo = min(spec.base_z, spec.tooth_top_z) + 1
        hi = max(spec.base_z, spec.tooth_top_z) - 1
        if hi < lo:
            continue
        zs = np.arange(lo, hi + 1) % shape.nz
        inner[np.ix_(xs, zs)] = True
    return inner


def build_grating_pair_mask(g_bottom: GratingSpec, g_top: GratingSpec,
                            shape: LatticeShape) -> BoundaryMask:
    """Union of two grating surfaces facing each other.

    The teeth must point toward each other with at least one free z layer
    between the tooth tops.  Coinciding faces (base planes glued through
    the periodic wrap) are frozen once; interpenetrating solids are
    rejected.
    """
    if g_bottom.orientation != +1 or g_top.orientation != -1:
        raise GeometryError("bottom teeth must point +z and top teeth -z")
    gap = (g_top.tooth_top_z - g_bottom.tooth_top_z) % shape.nz
    back = shape.nz - (g_bottom.tooth_height + g_top.tooth_height)
    if gap < 1 or gap > back:
        raise GeometryError("grating teeth overlap or wrap into each other")
    if np.any(_grating_interior_sites(g_bottom, shape) & _grating_solid_sites(g_top, shape)) \
            or np.any(_grating_interior_sites(g_top, shape) & _grating_solid_sites(g_bottom, shape)):
        raise GeometryError("grating bodies interpenetrate")
    return build_grating_mask(g_bottom, shape) | build_grating_mask(g_top, shape)


def build_dielectric_map(slab: DielectricSlab, shape: LatticeShape) -> np.ndarray:
    """Per-site permittivity array (nx, ny, nz): epsilon inside, 1 outside."""
    eps = np.ones((shape.nx, shape.ny, shape.nz))
    (x0, x1), (y0, y1), (z0, z1) = slab.ranges(shape)
    eps[x0:x1, y0:y1, z0:z1] = slab.epsilon
    return eps


def scene_mask(scene: SceneSpec) -> BoundaryMask:
    """Union of the conductor masks of every body in the scene."""
    mask = BoundaryMask(scene.shape)
    bodies = scene.body_list()
    gratings = [b for b in bodies if isinstance(b, GratingSpec)]
    if len(gratings) == 2:
        mask = mask | build_grating_pair_mask(gratings[0], gratings[1], scene.shape)
    elif len(gratings) == 1:
        mask = mask | build_grating_mask(gratings[0], scene.shape)
    for body in bodies:
        if isinstance(body, PlatePairSpec):
            mask = mask | build_plate_pair_mask(body, scene.shape)
        elif isinstance(body, Plate):
            mask = mask | build_plate_mask(body.z, scene.shape)
    return mask


def scene_dielectric(scene: SceneSpec) -> np.ndarray | None:
    """Combined permittivity map of the scene, or None when trivial."""
    slabs = [b for b in scene.body_list() if isinstance(b, DielectricSlab)]
    if not slabs:
        return None
    eps = np.ones((scene.shape.nx, scene.shape.ny, scene.shape.nz))
    for slab in slabs:
        (x0, x1), (y0, y1), (z0, z1) = slab.ranges(scene.shape)
        region = eps[x0:x1, y0:y1, z0:z1]
        if np.any(region != 1.0):
            raise GeometryError("dielectric slabs overlap")
        region[...] = slab.epsilon
    return eps


# ---------------------------------------------------------------------------
# renormalization scenes


def renormalization_scenes(
        scene: SceneSpec) -> tuple[SceneSpec, SceneSpec, SceneSpec, SceneSpec]:
    """Expand a two-body scene into (full, body A only, body B only, free).

    All four live on the identical lattice and couplings.  A plate pair
    counts as its two planes, so the single-body scenes hold one plane
    each; for the glued pair both planes are the same frozen sublattice.
    """
    bodies = scene.body_list()
    if len(bodies) == 1 and isinstance(bodies[0], PlatePairSpec):
        pair = bodies[0]
        pair.validate(scene.shape)
        body_a: Body = Plate(pair.z_low % scene.shape.nz)
        body_b: Body = Plate(pair.z_high % scene.shape.nz)
    elif len(bodies) == 2:
        body_a, body_b = bodies
    else:
        raise GeometryError(
            f"renormalization needs exactly two interacting bodies, got {len(bodies)}"
        )
    full = SceneSpec(scene.shape, scene.params, bodies)
    scene_a = SceneSpec(scene.shape, scene.params, (body_a,))
    scene_b = SceneSpec(scene.shape, scene.params, (body_b,))
    free = SceneSpec(scene.shape, scene.params, ())
    return full, scene_a, scene_b, free
