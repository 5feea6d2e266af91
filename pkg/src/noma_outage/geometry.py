"""Curved-Earth scenario geometry: aircraft placement, specular ground
reflection points, and the random reflective-area map.

All positions live on a sphere of configurable radius.  The ground station
sits at latitude/longitude (0, 0); local ground coordinates are an azimuthal
equidistant projection about its ground point (x east, y north, meters),
accurate to sub-meter level for rectangle membership at cell scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .config import ScenarioConfig

#: Attempts per aircraft before giving up on the separation constraint.
MAX_PLACEMENT_ATTEMPTS = 10_000

#: Golden-section iterations; shrinks the arc parameter interval below 1e-13,
#: far past the 1 mm path-length tolerance for any cell-scale geometry.
_GOLDEN_ITERS = 64
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class CellCapacityError(RuntimeError):
    """Rejection sampling could not satisfy the minimum-separation constraint."""


class CoverageError(RuntimeError):
    """The reflective-area coverage target cannot be met."""


@dataclass(frozen=True)
class EarthModel:
    radius_m: float = 6_371_000.0

    def __post_init__(self) -> None:
        if self.radius_m <= 0:
            raise ValueError(f"earth radius must be positive, got {self.radius_m}")


@dataclass(frozen=True)
class GeoPoint:
    """Geocentric spherical coordinates (radians) plus height above MSL."""

    lat: float
    lon: float
    height_m: float

    def __post_init__(self) -> None:
        if self.height_m < 0:
            raise ValueError(f"height must be nonnegative, got {self.height_m}")

    def unit(self) -> np.ndarray:
        cl = math.cos(self.lat)
        return np.array(
            [cl * math.cos(self.lon), cl * math.sin(self.lon), math.sin(self.lat)]
        )

    def xyz(self, earth: EarthModel) -> np.ndarray:
        """Cartesian position in meters; norm equals radius + height."""
        return (earth.radius_m + self.height_m) * self.unit()


@dataclass(frozen=True)
class ScenarioGeometry:
    earth: EarthModel
    gs: GeoPoint
    aircraft: tuple[GeoPoint, ...]
    cell_radius_m: float
    min_separation_m: float


def gs_point(cfg: ScenarioConfig) -> GeoPoint:
    return GeoPoint(0.0, 0.0, cfg.gs_height_m)


@lru_cache(maxsize=64)
def _local_frame(center: GeoPoint) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(up, east, north) unit vectors at the center's ground point."""
    up = center.unit()
    east = np.cross([0.0, 0.0, 1.0], up)
    norm = np.linalg.norm(east)
    if norm < 1e-12:
        raise ValueError("local frame undefined at the poles")
    east /= norm
    north = np.cross(up, east)
    return up, east, north


def point_from_local(
    center: GeoPoint, earth: EarthModel, x_east: float, y_north: float, height_m: float
) -> GeoPoint:
    """Inverse azimuthal equidistant projection about the center ground point."""
    up, east, north = _local_frame(center)
    rho = math.hypot(x_east, y_north)
    theta = rho / earth.radius_m
    if rho < 1e-12:
        u = up
    else:
        d = (x_east * east + y_north * north) / rho
        u = math.cos(theta) * up + math.sin(theta) * d
    return GeoPoint(math.asin(np.clip(u[2], -1.0, 1.0)), math.atan2(u[1], u[0]), height_m)


def local_from_point(center: GeoPoint, earth: EarthModel, pt: GeoPoint) -> tuple[float, float]:
    """Azimuthal equidistant coordinates (x east, y north) of a point's ground
    projection."""
    xy = local_from_units(center, earth, pt.unit()[None, :])[0]
    return float(xy[0]), float(xy[1])


def local_from_units(center: GeoPoint, earth: EarthModel, units: np.ndarray) -> np.ndarray:
    """Vectorized azimuthal equidistant projection of unit direction vectors;
    returns (n, 2) local ground coordinates."""
    up, east, north = _local_frame(center)
    u = np.atleast_2d(units)
    c = np.clip(u @ up, -1.0, 1.0)
    w = u - c[:, None] * up[None, :]
    wn = np.linalg.norm(w, axis=1)
    theta = np.arctan2(wn, c)  # stable for small separations, unlike arccos
    scale = np.where(wn < 1e-15, 0.0, earth.radius_m * theta / np.maximum(wn, 1e-300))
    return np.column_stack([scale * (w @ east), scale * (w @ north)])


def great_circle_distance(earth: EarthModel, a: GeoPoint, b: GeoPoint) -> float:
    ua, ub = a.unit(), b.unit()
    c = float(np.dot(ua, ub))
    s = float(np.linalg.norm(np.cross(ua, ub)))
    return earth.radius_m * math.atan2(s, c)


def sample_aircraft_positions(cfg: ScenarioConfig, rng: np.random.Generator) -> list[GeoPoint]:
    """Draw aircraft uniformly over the cell disc (radial CDF proportional to
    r^2) at the configured altitude, resampling any point that violates the
    3-D minimum separation."""
    earth = EarthModel(cfg.earth_radius_m)
    center = gs_point(cfg)
    points: list[GeoPoint] = []
    accepted_xyz: list[np.ndarray] = []
    for _ in range(cfg.k_aircraft):
        for attempt in range(MAX_PLACEMENT_ATTEMPTS):
            r = cfg.cell_radius_m * math.sqrt(rng.random())
            az = 2.0 * math.pi * rng.random()
            pt = point_from_local(
                center, earth, r * math.sin(az), r * math.cos(az), cfg.aircraft_altitude_m
            )
            xyz = pt.xyz(earth)
            if all(
                np.linalg.norm(xyz - other) >= cfg.min_separation_m for other in accepted_xyz
            ):
                points.append(pt)
                accepted_xyz.append(xyz)
                break
        else:
            raise CellCapacityError(
                f"could not place aircraft {len(points) + 1}/{cfg.k_aircraft} with "
                f"{cfg.min_separation_m} m separation in {MAX_PLACEMENT_ATTEMPTS} attempts"
            )
    return points


def scenario_geometry(cfg: ScenarioConfig, rng: np.random.Generator) -> ScenarioGeometry:
    return ScenarioGeometry(
        earth=EarthModel(cfg.earth_radius_m),
        gs=gs_point(cfg),
        aircraft=tuple(sample_aircraft_positions(cfg, rng)),
        cell_radius_m=cfg.cell_radius_m,
        min_separation_m=cfg.min_separation_m,
    )


# ---------------------------------------------------------------------------
# Specular reflection point
# ---------------------------------------------------------------------------

def specular_reflection_points_batch(
    gs: GeoPoint, aircraft_xyz: np.ndarray, earth: EarthModel
) -> np.ndarray:
    """Ground reflection points for one station and many aircraft.

    For each aircraft the point on the sphere surface minimizing the total
    path station -> surface -> aircraft is found by golden-section search on
    the great-circle arc between the two ground projections.  Returns an
    (n, 3) array of Cartesian surface points.
    """
    re = earth.radius_m
    g = gs.xyz(earth)
    a = np.atleast_2d(np.asarray(aircraft_xyz, dtype=float))
    u1 = g / np.linalg.norm(g)
    u2 = a / np.linalg.norm(a, axis=1, keepdims=True)
    cosw = np.clip(u2 @ u1, -1.0, 1.0)
    sinw = np.linalg.norm(np.cross(np.broadcast_to(u1, u2.shape), u2), axis=1)
    omega = np.arctan2(sinw, cosw)  # stable down to tiny angular separations
    degenerate = sinw < 1e-15

    def surface(t: np.ndarray) -> np.ndarray:
        # Spherical interpolation between the two ground projections.
        s = np.where(degenerate, 1.0, sinw)
        w1 = np.sin((1.0 - t) * omega) / s
        w2 = np.sin(t * omega) / s
        u = w1[:, None] * u1[None, :] + w2[:, None] * u2
        u[degenerate] = u1
        return re * u

    def path(t: np.ndarray) -> np.ndarray:
        x = surface(t)
        return np.linalg.norm(x - g, axis=1) + np.linalg.norm(x - a, axis=1)

    lo = np.zeros(len(a))
    hi = np.ones(len(a))
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = path(c), path(d)
    for _ in range(_GOLDEN_ITERS):
        left = fc < fd  # keep [lo, d] on the left branch, [c, hi] on the right
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        d_new = np.where(left, c, lo + _INV_PHI * (hi - lo))
        c_new = np.where(left, hi - _INV_PHI * (hi - lo), d)
        fresh = path(np.where(left, c_new, d_new))
        fd_new = np.where(left, fc, fresh)
        fc_new = np.where(left, fresh, fd)
        c, d, fc, fd = c_new, d_new, fc_new, fd_new

    # The golden search is path-noise limited near steep reflections; the
    # minimum is also the zero of the (monotone) grazing-angle difference,
    # which bisects cleanly to machine precision.
    def grazing_gap(t: np.ndarray) -> np.ndarray:
        x = surface(t)
        n = x / re
        to_g = g - x
        to_a = a - x
        s1 = np.sum(to_g * n, axis=1) / np.linalg.norm(to_g, axis=1)
        s2 = np.sum(to_a * n, axis=1) / np.linalg.norm(to_a, axis=1)
        return np.arcsin(np.clip(s1, -1, 1)) - np.arcsin(np.clip(s2, -1, 1))

    blo = np.clip(lo - 1e-3, 0.0, 1.0)
    bhi = np.clip(hi + 1e-3, 0.0, 1.0)
    glo, ghi = grazing_gap(blo), grazing_gap(bhi)
    bad = (glo < 0) | (ghi > 0)  # stalled far off: fall back to the full arc
    blo[bad], bhi[bad] = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (blo + bhi)
        gm = grazing_gap(mid)
        pos = gm > 0
        blo = np.where(pos, mid, blo)
        bhi = np.where(pos, bhi, mid)
    t_star = 0.5 * (blo + bhi)
    t_star[degenerate] = 0.0
    return surface(t_star)


def specular_reflection_point(gs: GeoPoint, ac: GeoPoint, earth: EarthModel) -> GeoPoint:
    """Specular ground reflection point between an elevated station and an
    elevated aircraft (height 0 result)."""
    if gs.height_m <= 0 or ac.height_m <= 0:
        raise ValueError("both endpoints must be above the surface")
    xyz = specular_reflection_points_batch(gs, ac.xyz(earth)[None, :], earth)[0]
    u = xyz / np.linalg.norm(xyz)
    return GeoPoint(math.asin(np.clip(u[2], -1.0, 1.0)), math.atan2(u[1], u[0]), 0.0)


def grazing_angle(surface_xyz: np.ndarray, other_xyz: np.ndarray) -> float | np.ndarray:
    """Elevation of a point above the local horizon at a surface point, in
    radians.  At the specular point the station-side and aircraft-side values
    coincide."""
    p = np.asarray(surface_xyz, dtype=float)
    q = np.asarray(other_xyz, dtype=float)
    n = p / np.linalg.norm(p, axis=-1, keepdims=True)
    d = q - p
    d = d / np.linalg.norm(d, axis=-1, keepdims=True)
    s = np.clip(np.sum(n * d, axis=-1), -1.0, 1.0)
    return np.arcsin(s)


# ---------------------------------------------------------------------------
# Reflective-area map
# ---------------------------------------------------------------------------

@dataclass
class ReflectorMap:
    """Non-overlapping axis-aligned reflective rectangles in local ground
    coordinates around the station.

    ``rects`` has rows (xmin, ymin, xmax, ymax); every rectangle intersects
    the cell disc and total in-disc rectangle area equals
    ``coverage_fraction`` times the disc area to within one rectangle.
    """

    rects: np.ndarray
    coverage_fraction: float
    seed: int
    center: GeoPoint
    earth: EarthModel
    cell_radius_m: float
    area_in_disc_m2: float
    _grid: dict | None = field(default=None, repr=False, compare=False)
    _grid_pitch: float = field(default=0.0, repr=False, compare=False)
    _grid_origin: float = field(default=0.0, repr=False, compare=False)

    @property
    def rectangles(self) -> np.ndarray:
        """(center_x, center_y, width, length) rows, for reporting."""
        r = self.rects
        return np.column_stack(
            [(r[:, 0] + r[:, 2]) / 2, (r[:, 1] + r[:, 3]) / 2, r[:, 2] - r[:, 0], r[:, 3] - r[:, 1]]
        )

    def _ensure_grid(self) -> None:
        if self._grid is not None:
            return
        pitch = max((self.rects[:, 2] - self.rects[:, 0]).max(initial=1.0), 1.0)
        origin = -self.cell_radius_m - 2.0 * pitch
        # every rectangle side fits one pitch, so a rectangle touches at most
        # 2 cells per axis: enumerate the four candidate corners
        ix0 = ((self.rects[:, 0] - origin) // pitch).astype(np.int64)
        iy0 = ((self.rects[:, 1] - origin) // pitch).astype(np.int64)
        ix1 = ((self.rects[:, 2] - origin) // pitch).astype(np.int64)
        iy1 = ((self.rects[:, 3] - origin) // pitch).astype(np.int64)
        idx = np.arange(len(self.rects))
        keys, owners = [], []
        for gx, gy, mask in (
            (ix0, iy0, None),
            (ix1, iy0, ix1 > ix0),
            (ix0, iy1, iy1 > iy0),
            (ix1, iy1, (ix1 > ix0) & (iy1 > iy0)),
        ):
            if mask is None:
                keys.append(gx * (1 << 32) + gy)
                owners.append(idx)
            elif mask.any():
                keys.append((gx * (1 << 32) + gy)[mask])
                owners.append(idx[mask])
        key_arr = np.concatenate(keys) if keys else np.zeros(0, np.int64)
        own_arr = np.concatenate(owners) if owners else np.zeros(0, np.int64)
        order = np.argsort(key_arr, kind="stable")
        key_arr, own_arr = key_arr[order], own_arr[order]
        bounds = np.flatnonzero(np.r_[True, key_arr[1:] != key_arr[:-1]])
        bounds = np.r_[bounds, len(key_arr)]
        self._grid = {
            int(key_arr[b0]): own_arr[b0:b1] for b0, b1 in zip(bounds[:-1], bounds[1:])
        }
        self._grid_pitch = pitch
        self._grid_origin = origin

    def covers_local(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Membership test for points given in local ground coordinates."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.zeros(x.shape, dtype=bool)
        if len(self.rects) == 0:
            return out
        if self._grid is None and x.size * len(self.rects) <= 2_000_000:
            r = self.rects
            px, py = x[:, None], y[:, None]
            return (
                (px >= r[None, :, 0])
                & (px <= r[None, :, 2])
                & (py >= r[None, :, 1])
                & (py <= r[None, :, 3])
            ).any(axis=1)
        self._ensure_grid()
        pitch, origin = self._grid_pitch, self._grid_origin
        keys = ((x - origin) // pitch).astype(np.int64) * (1 << 32) + (
            (y - origin) // pitch
        ).astype(np.int64)
        order = np.argsort(keys, kind="stable")
        sorted_keys = keys[order]
        boundaries = np.flatnonzero(np.r_[True, sorted_keys[1:] != sorted_keys[:-1]])
        boundaries = np.r_[boundaries, len(sorted_keys)]
        for b0, b1 in zip(boundaries[:-1], boundaries[1:]):
            pts = order[b0:b1]
            cand = self._grid.get(int(sorted_keys[b0]))
            if cand is None:
                continue
            r = self.rects[cand]
            px = x[pts][:, None]
            py = y[pts][:, None]
            hit = (
                (px >= r[None, :, 0])
                & (px <= r[None, :, 2])
                & (py >= r[None, :, 1])
                & (py <= r[None, :, 3])
            ).any(axis=1)
            out[pts] = hit
        return out


def is_reflective(refl_map: ReflectorMap, pt: GeoPoint) -> bool:
    """True iff the ground point lies inside any reflective rectangle."""
    x, y = local_from_point(refl_map.center, refl_map.earth, pt)
    return bool(refl_map.covers_local(np.array([x]), np.array([y]))[0])


def _rect_disc_areas(rects: np.ndarray, radius: float) -> np.ndarray:
    """Exact area of each rectangle clipped to the disc of given radius.

    Interior rectangles are handled directly; rectangles crossing the
    boundary are integrated with 64-node Gauss-Legendre quadrature, which is
    exact to rounding for these smooth single-kink integrands.
    """
    if len(rects) == 0:
        return np.zeros(0)
    x0, y0, x1, y1 = rects.T
    corner = np.hypot(np.maximum(np.abs(x0), np.abs(x1)), np.maximum(np.abs(y0), np.abs(y1)))
    areas = (x1 - x0) * (y1 - y0)
    boundary = corner > radius
    if boundary.any():
        nodes, weights = np.polynomial.legendre.leggauss(64)
        bx0 = np.clip(x0[boundary], -radius, radius)
        bx1 = np.clip(x1[boundary], -radius, radius)
        half = (bx1 - bx0) / 2.0
        mid = (bx1 + bx0) / 2.0
        xs = mid[:, None] + half[:, None] * nodes[None, :]
        yt = np.sqrt(np.maximum(radius**2 - xs**2, 0.0))
        seg = np.clip(np.minimum(y1[boundary][:, None], yt) - np.maximum(y0[boundary][:, None], -yt), 0.0, None)
        areas[boundary] = half * (seg * weights[None, :]).sum(axis=1)
    return areas


def build_reflector_map(cfg: ScenarioConfig, seed: int) -> ReflectorMap:
    """Build the random reflective-area map for one channel realization.

    Rectangles are laid out in horizontal rows of random height; within a row
    widths and gaps are drawn independently, which guarantees non-overlap by
    construction at any coverage level.  The realized in-disc area is then
    calibrated to the coverage target by deleting a random subset, leaving an
    error below one rectangle area (~0.02% of the disc).
    """
    if not 0.0 < cfg.coverage_fraction < 1.0:
        raise CoverageError(f"coverage_fraction must be in (0, 1), got {cfg.coverage_fraction}")
    rng = np.random.default_rng(seed)
    radius = cfg.cell_radius_m
    smin, smax = cfg.rectangle_sides.min_m, cfg.rectangle_sides.max_m
    target = cfg.coverage_fraction
    fill = min(target * 1.08 + 0.01, 0.98)
    if target >= 0.95:
        raise CoverageError(f"coverage_fraction {target} exceeds the achievable fill")
    mean_w = 0.5 * (smin + smax)
    mean_gap = mean_w * (1.0 - fill) / fill
    xlo, xhi = -radius - smax, radius + smax
    span = xhi - xlo

    rows: list[np.ndarray] = []
    y = xlo
    while y < radius + smax:
        h = rng.uniform(smin, smax)
        n = int(span / (mean_w + mean_gap) * 1.6) + 16
        widths = rng.uniform(smin, smax, size=n)
        gaps = rng.uniform(0.0, 2.0 * mean_gap, size=n)
        starts = xlo - rng.uniform(0.0, smax + 2.0 * mean_gap) + np.r_[0.0, np.cumsum(widths + gaps)[:-1]]
        while starts[-1] + widths[-1] < xhi:  # rare: row not yet spanned
            more_w = rng.uniform(smin, smax, size=n)
            more_g = rng.uniform(0.0, 2.0 * mean_gap, size=n)
            more_s = starts[-1] + widths[-1] + gaps[-1] + np.r_[0.0, np.cumsum(more_w + more_g)[:-1]]
            starts = np.r_[starts, more_s]
            widths = np.r_[widths, more_w]
            gaps = np.r_[gaps, more_g]
        rect = np.column_stack([starts, np.full_like(starts, y), starts + widths, np.full_like(starts, y + h)])
        # keep rectangles whose box intersects the cell disc
        cx = np.clip(0.0, rect[:, 0], rect[:, 2])
        cy = np.clip(0.0, rect[:, 1], rect[:, 3])
        rows.append(rect[cx**2 + cy**2 <= radius**2])
        y += h
    rects = np.vstack(rows) if rows else np.zeros((0, 4))

    areas = _rect_disc_areas(rects, radius)
    disc_area = math.pi * radius**2
    target_area = target * disc_area
    total = float(areas.sum())
    if total < target_area:
        raise CoverageError(
            f"coverage target {target} unreachable: placed {total / disc_area:.4f}"
        )
    order = rng.permutation(len(rects))
    keep = np.ones(len(rects), dtype=bool)
    for idx in order:
        if total <= target_area:
            break
        keep[idx] = False
        total -= areas[idx]
    return ReflectorMap(
        rects=rects[keep],
        coverage_fraction=target,
        seed=int(seed),
        center=GeoPoint(0.0, 0.0, 0.0),
        earth=EarthModel(cfg.earth_radius_m),
        cell_radius_m=radius,
        area_in_disc_m2=total,
    )
