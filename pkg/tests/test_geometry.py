import math

import numpy as np
import pytest

from noma_outage.config import RectangleSides, ScenarioConfig
from noma_outage.geometry import (
    CellCapacityError,
    CoverageError,
    EarthModel,
    GeoPoint,
    build_reflector_map,
    grazing_angle,
    great_circle_distance,
    gs_point,
    is_reflective,
    local_from_point,
    point_from_local,
    sample_aircraft_positions,
    specular_reflection_point,
    specular_reflection_points_batch,
)

EARTH = EarthModel()


def test_geopoint_norm_is_radius_plus_height():
    pt = GeoPoint(0.3, -1.2, 10_000.0)
    assert np.linalg.norm(pt.xyz(EARTH)) == pytest.approx(EARTH.radius_m + 10_000.0, rel=1e-12)


def test_local_projection_round_trip():
    center = gs_point(ScenarioConfig())
    for x, y in [(0.0, 0.0), (100.0, -50.0), (150_000.0, 90_000.0), (-220_000.0, 10.0)]:
        pt = point_from_local(center, EARTH, x, y, 0.0)
        xb, yb = local_from_point(center, EARTH, pt)
        assert xb == pytest.approx(x, abs=1e-6)
        assert yb == pytest.approx(y, abs=1e-6)


# ---------------------------------------------------------------------------
# aircraft placement
# ---------------------------------------------------------------------------

def test_single_aircraft_inside_cell_at_altitude():
    cfg = ScenarioConfig(k_aircraft=1)
    pts = sample_aircraft_positions(cfg, np.random.default_rng(1))
    assert len(pts) == 1
    assert pts[0].height_m == cfg.aircraft_altitude_m
    assert great_circle_distance(EARTH, gs_point(cfg), pts[0]) <= cfg.cell_radius_m


def test_pairwise_separation_enforced():
    cfg = ScenarioConfig(k_aircraft=16)
    for seed in range(5):
        pts = sample_aircraft_positions(cfg, np.random.default_rng(seed))
        xyz = np.array([p.xyz(EARTH) for p in pts])
        delta = xyz[:, None, :] - xyz[None, :, :]
        dist = np.linalg.norm(delta, axis=2)
        dist[np.diag_indices(len(pts))] = np.inf
        assert dist.min() >= cfg.min_separation_m
        assert all(p.height_m == cfg.aircraft_altitude_m for p in pts)


def test_sampling_deterministic_given_seed():
    cfg = ScenarioConfig(k_aircraft=8)
    a = sample_aircraft_positions(cfg, np.random.default_rng(42))
    b = sample_aircraft_positions(cfg, np.random.default_rng(42))
    assert a == b


def test_mean_distance_matches_uniform_disc():
    # uniform-in-area disc: E[distance to center] = 2R/3
    cfg = ScenarioConfig(k_aircraft=32)
    gs = gs_point(cfg)
    rng = np.random.default_rng(7)
    dists = []
    for _ in range(10_000 // 32):
        for p in sample_aircraft_positions(cfg, rng):
            dists.append(great_circle_distance(EARTH, gs, p))
    mean = np.mean(dists)
    assert mean == pytest.approx(2.0 * cfg.cell_radius_m / 3.0, rel=0.02)


def test_overcrowded_cell_raises_capacity_error():
    cfg = ScenarioConfig(k_aircraft=12, cell_radius_m=12_000.0, min_separation_m=10_000.0)
    with pytest.raises(CellCapacityError):
        sample_aircraft_positions(cfg, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# specular reflection point
# ---------------------------------------------------------------------------

def test_flat_earth_equal_heights_gives_midpoint():
    flat = EarthModel(radius_m=1e9 * EARTH.radius_m)
    gs = GeoPoint(0.0, 0.0, 600.0)
    ac = GeoPoint(0.0, 50_000.0 / flat.radius_m, 600.0)
    spec = specular_reflection_point(gs, ac, flat)
    assert spec.height_m == 0.0
    assert spec.lon == pytest.approx(ac.lon / 2.0, rel=1e-6)


def test_grazing_angles_equal_for_random_pairs():
    rng = np.random.default_rng(3)
    cfg = ScenarioConfig(k_aircraft=1)
    gs = gs_point(cfg)
    worst = 0.0
    for _ in range(1000):
        r = cfg.cell_radius_m * math.sqrt(rng.random())
        az = rng.uniform(0.0, 2.0 * math.pi)
        ac = point_from_local(gs, EARTH, r * math.sin(az), r * math.cos(az),
                              cfg.aircraft_altitude_m)
        spec = specular_reflection_point(gs, ac, EARTH)
        sxyz = spec.xyz(EARTH)
        g1 = grazing_angle(sxyz, gs.xyz(EARTH))
        g2 = grazing_angle(sxyz, ac.xyz(EARTH))
        worst = max(worst, abs(float(g1) - float(g2)))
    assert worst < 1e-6


def test_specular_point_matches_grid_search_oracle():
    rng = np.random.default_rng(11)
    cfg = ScenarioConfig(k_aircraft=1)
    gs = gs_point(cfg)
    gxyz = gs.xyz(EARTH)
    for _ in range(3):
        r = cfg.cell_radius_m * math.sqrt(rng.uniform(0.2, 1.0))
        az = rng.uniform(0.0, 2.0 * math.pi)
        ac = point_from_local(gs, EARTH, r * math.sin(az), r * math.cos(az),
                              cfg.aircraft_altitude_m)
        axyz = ac.xyz(EARTH)

        # exhaustive 1e6-point search over the great-circle arc parameter
        u1 = gxyz / np.linalg.norm(gxyz)
        u2 = axyz / np.linalg.norm(axyz)
        omega = math.acos(float(np.clip(np.dot(u1, u2), -1, 1)))
        t = np.linspace(0.0, 1.0, 1_000_001)
        pts = (
            np.sin((1 - t)[:, None] * omega) * u1[None, :]
            + np.sin(t[:, None] * omega) * u2[None, :]
        ) / math.sin(omega) * EARTH.radius_m
        path = np.linalg.norm(pts - gxyz, axis=1) + np.linalg.norm(pts - axyz, axis=1)
        best = path.min()

        spec = specular_reflection_point(gs, ac, EARTH)
        sxyz = spec.xyz(EARTH)
        got = np.linalg.norm(sxyz - gxyz) + np.linalg.norm(sxyz - axyz)
        assert abs(got - best) < 1e-3


def test_specular_batch_matches_scalar():
    cfg = ScenarioConfig(k_aircraft=4)
    gs = gs_point(cfg)
    pts = sample_aircraft_positions(cfg, np.random.default_rng(5))
    batch = specular_reflection_points_batch(
        gs, np.array([p.xyz(EARTH) for p in pts]), EARTH
    )
    for p, row in zip(pts, batch):
        single = specular_reflection_point(gs, p, EARTH).xyz(EARTH)
        assert np.linalg.norm(single - row) < 1e-3


def test_specular_rejects_surface_endpoints():
    gs = GeoPoint(0.0, 0.0, 0.0)
    ac = GeoPoint(0.0, 0.01, 10_000.0)
    with pytest.raises(ValueError):
        specular_reflection_point(gs, ac, EARTH)


# ---------------------------------------------------------------------------
# reflector map
# ---------------------------------------------------------------------------

def test_map_coverage_and_hit_rate():
    cfg = ScenarioConfig()
    refl = build_reflector_map(cfg, seed=123)
    disc_area = math.pi * cfg.cell_radius_m**2
    assert refl.area_in_disc_m2 / disc_area == pytest.approx(0.5, abs=0.02)

    # Monte Carlo area oracle: hit rate of uniform points over the cell
    rng = np.random.default_rng(9)
    n = 1_000_000
    r = cfg.cell_radius_m * np.sqrt(rng.random(n))
    az = rng.uniform(0.0, 2.0 * np.pi, n)
    hits = refl.covers_local(r * np.sin(az), r * np.cos(az))
    assert hits.mean() == pytest.approx(cfg.coverage_fraction, abs=0.01)


def test_map_rectangles_do_not_overlap_and_sides_in_range():
    cfg = ScenarioConfig()
    refl = build_reflector_map(cfg, seed=77)
    sides = refl.rectangles[:, 2:]
    assert sides.min() >= cfg.rectangle_sides.min_m - 1e-9
    assert sides.max() <= cfg.rectangle_sides.max_m + 1e-9
    wavelength = 299_792_458.0 / cfg.carrier_hz
    assert sides.min() >= 10.0 * wavelength

    rng = np.random.default_rng(1)
    pick = rng.choice(len(refl.rects), size=min(1200, len(refl.rects)), replace=False)
    r = refl.rects[pick]
    x0, y0, x1, y1 = r.T
    ox = np.minimum(x1[:, None], x1[None, :]) - np.maximum(x0[:, None], x0[None, :])
    oy = np.minimum(y1[:, None], y1[None, :]) - np.maximum(y0[:, None], y0[None, :])
    overlap = (ox > 1e-9) & (oy > 1e-9)
    overlap[np.diag_indices(len(r))] = False
    assert not overlap.any()


def test_map_deterministic_and_seed_recorded():
    cfg = ScenarioConfig()
    a = build_reflector_map(cfg, seed=5)
    b = build_reflector_map(cfg, seed=5)
    assert a.seed == 5
    assert np.array_equal(a.rects, b.rects)
    assert a.area_in_disc_m2 == b.area_in_disc_m2


def test_near_zero_coverage_gives_sparse_map():
    cfg = ScenarioConfig(coverage_fraction=0.01)
    refl = build_reflector_map(cfg, seed=3)
    rng = np.random.default_rng(2)
    n = 200_000
    r = cfg.cell_radius_m * np.sqrt(rng.random(n))
    az = rng.uniform(0.0, 2.0 * np.pi, n)
    assert refl.covers_local(r * np.sin(az), r * np.cos(az)).mean() < 0.02


def test_unreachable_coverage_raises():
    with pytest.raises((CoverageError, Exception)):
        build_reflector_map(ScenarioConfig(coverage_fraction=0.96), seed=1)


def test_is_reflective_rectangle_center_and_outside():
    cfg = ScenarioConfig()
    refl = build_reflector_map(cfg, seed=21)
    cx, cy = refl.rectangles[0, 0], refl.rectangles[0, 1]
    inside = point_from_local(refl.center, refl.earth, cx, cy, 0.0)
    assert is_reflective(refl, inside)

    # a point in a gap: scan along x at the first rectangle's y until outside all
    probe_x = np.linspace(-cfg.cell_radius_m, cfg.cell_radius_m, 4001)
    hits = refl.covers_local(probe_x, np.full_like(probe_x, cy))
    assert not hits.all()
    free_x = probe_x[~hits][0]
    outside = point_from_local(refl.center, refl.earth, float(free_x), cy, 0.0)
    assert not is_reflective(refl, outside)


def test_rectangle_side_bounds_validated():
    with pytest.raises(Exception):
        ScenarioConfig(rectangle_sides=RectangleSides(min_m=1.0, max_m=5000.0)).validate()
