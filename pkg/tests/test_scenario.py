"""Scene tests: intersection geometry, seeded spawning, lane-following mobility."""

import numpy as np
import pytest

from v2xric import (ConfigurationError, MobilityState, TrafficConfig, build_intersection,
                    default_rsus, spawn_vehicles, step_mobility)
from v2xric.scenario import CAR_EXTENT, TALL_EXTENT, VehicleState


def default_layout():
    return build_intersection(200.0, 14.0, building_setback_m=2.0)


def vehicle_at(vid, x, y, heading, speed=14.0):
    return VehicleState(vid=vid, position=(x, y), heading=heading,
                        speed_mps=speed, extent=CAR_EXTENT)


# --- geometry --------------------------------------------------------------------


def test_corner_points():
    layout = default_layout()
    assert layout.corner_points() == ((9.0, 9.0), (-9.0, 9.0), (-9.0, -9.0), (9.0, -9.0))
    assert layout.lane_offset_m == 3.5
    assert layout.total_road_length_m() == 800.0


def test_four_directed_lanes_cover_both_roads():
    layout = default_layout()
    assert len(layout.lanes) == 4
    frames = {(lane.axis, lane.direction, lane.offset) for lane in layout.lanes}
    assert frames == {("x", 1, -3.5), ("x", -1, 3.5), ("y", 1, 3.5), ("y", -1, -3.5)}
    east = next(l for l in layout.lanes if l.axis == "x" and l.direction == 1)
    west = next(l for l in layout.lanes if l.axis == "x" and l.direction == -1)
    assert east.point(-200.0) == (-200.0, -3.5)  # entry at the west end
    assert west.point(-200.0) == (200.0, 3.5)  # entry at the east end
    assert east.heading() == (1.0, 0.0)


def test_buildings_fill_quadrants_outside_setback():
    layout = default_layout()
    assert len(layout.buildings) == 4
    for b in layout.buildings:
        assert min(abs(b.x0), abs(b.x1)) == 9.0
        assert min(abs(b.y0), abs(b.y1)) == 9.0
        assert max(abs(b.x0), abs(b.x1)) == 200.0
        assert b.height == 20.0


def test_on_road_predicate():
    layout = default_layout()
    assert layout.on_road(0.0, 0.0)
    assert layout.on_road(150.0, -7.0)  # road edge is inclusive
    assert not layout.on_road(150.0, -7.1)
    assert not layout.on_road(201.0, 0.0)
    assert layout.on_road(3.5, 180.0)


def test_default_rsus_on_corners():
    layout = default_layout()
    rsus = default_rsus(layout)
    assert [r.rid for r in rsus] == [0, 1, 2, 3]
    assert {r.position for r in rsus} == set(layout.corner_points())
    assert all(r.mast_height_m == 6.0 for r in rsus)


@pytest.mark.parametrize("kwargs", [
    dict(arm_length_m=-1.0, road_width_m=14.0),
    dict(arm_length_m=200.0, road_width_m=0.0),
    dict(arm_length_m=200.0, road_width_m=14.0, building_setback_m=-1.0),
    dict(arm_length_m=5.0, road_width_m=8.0),  # no room left for buildings
])
def test_build_intersection_rejects_bad_geometry(kwargs):
    with pytest.raises(ConfigurationError):
        build_intersection(**kwargs)


# --- spawning --------------------------------------------------------------------


def test_spawn_is_deterministic_in_seed():
    layout = default_layout()
    a = spawn_vehicles(layout, TrafficConfig(seed=5))
    b = spawn_vehicles(layout, TrafficConfig(seed=5))
    c = spawn_vehicles(layout, TrafficConfig(seed=6))
    assert a == b
    assert a != c


def test_spawn_count_tracks_density():
    layout = default_layout()
    counts = [len(spawn_vehicles(layout, TrafficConfig(seed=s))) for s in range(300)]
    # 50 veh/km over 0.8 km of road: mean 40, SE of this mean ~0.37
    assert abs(np.mean(counts) - 40.0) < 1.5


def test_spawn_positions_on_road_with_minimum_spacing():
    layout = default_layout()
    for seed in range(10):
        vehicles = spawn_vehicles(layout, TrafficConfig(seed=seed))
        lanes: dict[tuple, list[float]] = {}
        for v in vehicles:
            assert layout.on_road(*v.position)
            hx, hy = v.heading
            if abs(hx) >= abs(hy):
                key, coord = (("x", hx, v.position[1]), v.position[0] * hx)
            else:
                key, coord = (("y", hy, v.position[0]), v.position[1] * hy)
            lanes.setdefault(key, []).append(coord)
        for coords in lanes.values():
            coords.sort()
            gaps = np.diff(coords)
            assert np.all(gaps >= CAR_EXTENT[0] - 1e-9)


def test_spawn_vids_are_dense_and_stable():
    layout = default_layout()
    vehicles = spawn_vehicles(layout, TrafficConfig(seed=3))
    assert [v.vid for v in vehicles] == list(range(len(vehicles)))


def test_tall_fraction_extremes():
    layout = default_layout()
    all_cars = spawn_vehicles(layout, TrafficConfig(seed=2, tall_fraction=0.0))
    all_tall = spawn_vehicles(layout, TrafficConfig(seed=2, tall_fraction=1.0))
    assert all(v.extent == CAR_EXTENT for v in all_cars)
    assert all(v.extent == TALL_EXTENT for v in all_tall)


def test_spawn_rejects_infeasible_density():
    layout = default_layout()
    with pytest.raises(ConfigurationError):
        spawn_vehicles(layout, TrafficConfig(seed=1, density_veh_km=500.0))


@pytest.mark.parametrize("kwargs", [
    dict(density_veh_km=0.5),
    dict(density_veh_km=1000.0),
    dict(speed_mps=0.0),
    dict(speed_mps=50.0),
    dict(tall_fraction=-0.1),
    dict(turn_probability=1.5),
    dict(seed=-1),
])
def test_traffic_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        TrafficConfig(**kwargs).validate()


# --- mobility --------------------------------------------------------------------


def test_straight_segment_advances_exactly():
    layout = default_layout()
    v = vehicle_at(0, 3.5, -50.0, (0.0, 1.0), speed=1.0)
    state = MobilityState.from_seed(1)
    out = step_mobility([v], layout, 10.0, state)
    assert out[0].position == (3.5, -40.0)
    assert out[0].heading == (0.0, 1.0)
    assert out[0].vid == 0


def test_step_size_does_not_change_event_free_motion():
    layout = default_layout()
    v = vehicle_at(0, -3.5, -120.0, (1.0, 0.0), speed=1.0)
    coarse = step_mobility([v], layout, 10.0, MobilityState.from_seed(1))[0]
    fine = [v]
    state = MobilityState.from_seed(1)
    for _ in range(10):
        fine = step_mobility(fine, layout, 1.0, state)
    assert fine[0].position == coarse.position
    assert fine[0].heading == coarse.heading


def test_no_turns_when_probability_zero():
    layout = default_layout()
    v = vehicle_at(0, -5.0, -3.5, (1.0, 0.0), speed=1.0)
    state = MobilityState.from_seed(1, turn_probability=0.0)
    out = step_mobility([v], layout, 10.0, state)
    assert out[0].position == (5.0, -3.5)
    assert out[0].heading == (1.0, 0.0)


def test_always_turn_when_probability_one():
    layout = default_layout()
    for seed in range(8):
        v = vehicle_at(0, -5.0, -3.5, (1.0, 0.0), speed=1.0)
        state = MobilityState.from_seed(seed, turn_probability=1.0)
        out = step_mobility([v], layout, 10.0, state)
        hx, hy = out[0].heading
        assert hx == 0.0 and abs(hy) == 1.0  # rotated onto the crossing road
        assert layout.on_road(*out[0].position)


def test_exit_respawns_at_a_lane_entry_with_leftover_distance():
    layout = default_layout()
    v = vehicle_at(0, 199.0, -3.5, (1.0, 0.0), speed=14.0)
    out = step_mobility([v], layout, 1.0, MobilityState.from_seed(7))[0]
    assert out.vid == 0
    assert layout.on_road(*out.position)
    spans = sorted(abs(c) for c in out.position)
    assert spans == [3.5, 187.0]  # 1 m to the edge, 13 m carried past the entry


def test_vehicle_count_and_identity_conserved():
    layout = default_layout()
    vehicles = spawn_vehicles(layout, TrafficConfig(seed=4, turn_probability=0.5))
    vids = sorted(v.vid for v in vehicles)
    state = MobilityState.from_seed(4, turn_probability=0.5)
    for _ in range(100):
        vehicles = step_mobility(vehicles, layout, 0.1, state)
        assert sorted(v.vid for v in vehicles) == vids
        assert all(layout.on_road(*v.position) for v in vehicles)


def test_mobility_is_deterministic_in_seed():
    layout = default_layout()
    start = spawn_vehicles(layout, TrafficConfig(seed=9))
    a, b = list(start), list(start)
    sa = MobilityState.from_seed(9)
    sb = MobilityState.from_seed(9)
    for _ in range(50):
        a = step_mobility(a, layout, 0.1, sa)
        b = step_mobility(b, layout, 0.1, sb)
    assert a == b


def test_nonpositive_dt_rejected():
    layout = default_layout()
    v = vehicle_at(0, 0.0, -3.5, (1.0, 0.0))
    with pytest.raises(ConfigurationError):
        step_mobility([v], layout, 0.0, MobilityState.from_seed(1))
