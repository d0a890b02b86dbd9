"""Urban intersection scene: two crossing roads, corner buildings, moving vehicles.

Geometry is axis-aligned: the two roads run along x and y through the origin,
each with one lane per direction (right-hand traffic, lane centerlines at
+/- road_width/4). Buildings fill the four quadrants from the road edge plus a
setback out to the scene extent. All randomness is drawn from explicitly
seeded generators, so equal (config, seed) gives bitwise-equal trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError

_SPAWN_TAG = 17
_MOBILITY_TAG = 23

CAR_EXTENT = (5.0, 2.0, 1.6)
TALL_EXTENT = (5.0, 2.5, 4.0)  # trucks: same order of footprint, 4 m body


@dataclass(frozen=True, slots=True)
class Building:
    x0: float
    y0: float
    x1: float
    y1: float
    height: float


@dataclass(frozen=True, slots=True)
class Lane:
    """One directed lane. Travel coordinate c runs from -half_length (entry)
    to +half_length (exit) along the driving direction."""

    axis: str  # "x" or "y"
    direction: int  # +1 or -1 along that axis
    offset: float  # perpendicular centerline offset
    half_length: float

    def point(self, c: float) -> tuple[float, float]:
        along = c * self.direction
        if self.axis == "x":
            return (along, self.offset)
        return (self.offset, along)

    def heading(self) -> tuple[float, float]:
        d = float(self.direction)
        return (d, 0.0) if self.axis == "x" else (0.0, d)


@dataclass(frozen=True, slots=True)
class RoadLayout:
    arm_length_m: float
    road_width_m: float
    building_setback_m: float
    buildings: tuple[Building, ...]
    lanes: tuple[Lane, ...]

    @property
    def lane_offset_m(self) -> float:
        return self.road_width_m / 4.0

    def total_road_length_m(self) -> float:
        return 4.0 * self.arm_length_m  # two roads, each 2*arm long

    def corner_points(self) -> tuple[tuple[float, float], ...]:
        """Inner building corners nearest the junction, one per quadrant."""
        s = self.road_width_m / 2.0 + self.building_setback_m
        return ((s, s), (-s, s), (-s, -s), (s, -s))

    def on_road(self, x: float, y: float) -> bool:
        half_w = self.road_width_m / 2.0
        a = self.arm_length_m
        on_x_road = abs(y) <= half_w and abs(x) <= a
        on_y_road = abs(x) <= half_w and abs(y) <= a
        return on_x_road or on_y_road


@dataclass(frozen=True, slots=True)
class RsuNode:
    """Roadside unit on a corner mast."""

    rid: int
    position: tuple[float, float]
    mast_height_m: float = 6.0


@dataclass(frozen=True, slots=True)
class VehicleState:
    vid: int  # stable identity; the RAN layer maps it to NodeId(CAV, vid)
    position: tuple[float, float]
    heading: tuple[float, float]  # unit, axis-aligned
    speed_mps: float
    extent: tuple[float, float, float]  # length, width, height


@dataclass(slots=True)
class TrafficConfig:
    density_veh_km: float = 50.0
    speed_mps: float = 14.0
    seed: int = 1
    tall_fraction: float = 0.10
    turn_probability: float = 0.25

    def validate(self) -> "TrafficConfig":
        if not (1.0 <= self.density_veh_km <= 500.0):
            raise ConfigurationError(f"density_veh_km out of range [1, 500]: {self.density_veh_km}")
        if not (0.0 < self.speed_mps <= 40.0):
            raise ConfigurationError(f"speed_mps out of range (0, 40]: {self.speed_mps}")
        if not (0.0 <= self.tall_fraction <= 1.0):
            raise ConfigurationError(f"tall_fraction out of range [0, 1]: {self.tall_fraction}")
        if not (0.0 <= self.turn_probability <= 1.0):
            raise ConfigurationError(f"turn_probability out of range [0, 1]: {self.turn_probability}")
        if not (0 <= int(self.seed) < 2**63):
            raise ConfigurationError(f"seed out of range: {self.seed}")
        return self


def build_intersection(arm_length_m: float, road_width_m: float,
                       building_setback_m: float = 2.0,
                       building_height_m: float = 20.0) -> RoadLayout:
    """Two crossing roads of the given arm length with four corner buildings."""
    if not (arm_length_m > 0 and math.isfinite(arm_length_m)):
        raise ConfigurationError(f"arm_length_m must be positive: {arm_length_m}")
    if not (road_width_m > 0 and math.isfinite(road_width_m)):
        raise ConfigurationError(f"road_width_m must be positive: {road_width_m}")
    if building_setback_m < 0 or not math.isfinite(building_setback_m):
        raise ConfigurationError(f"building_setback_m must be >= 0: {building_setback_m}")
    if not (building_height_m > 0 and math.isfinite(building_height_m)):
        raise ConfigurationError(f"building_height_m must be positive: {building_height_m}")
    s = road_width_m / 2.0 + building_setback_m
    a = arm_length_m
    if s >= a:
        raise ConfigurationError(
            f"road_width/2 + setback ({s}) leaves no room for buildings inside arm length {a}"
        )
    h = building_height_m
    buildings = (
        Building(s, s, a, a, h),
        Building(-a, s, -s, a, h),
        Building(-a, -a, -s, -s, h),
        Building(s, -a, a, -s, h),
    )
    o = road_width_m / 4.0
    lanes = (
        Lane("x", +1, -o, a),  # eastbound, south side
        Lane("x", -1, +o, a),  # westbound, north side
        Lane("y", +1, +o, a),  # northbound, east side
        Lane("y", -1, -o, a),  # southbound, west side
    )
    return RoadLayout(
        arm_length_m=a,
        road_width_m=road_width_m,
        building_setback_m=building_setback_m,
        buildings=buildings,
        lanes=lanes,
    )


def default_rsus(layout: RoadLayout, mast_height_m: float = 6.0) -> list[RsuNode]:
    """One RSU per inner building corner, LOS down both arms of its quadrant."""
    return [
        RsuNode(rid=k, position=p, mast_height_m=mast_height_m)
        for k, p in enumerate(layout.corner_points())
    ]


def spawn_vehicles(layout: RoadLayout, cfg: TrafficConfig) -> list[VehicleState]:
    """Seeded initial traffic: per road, count ~ Poisson(density * road length),
    split uniformly over its lanes, positions uniform with a one-car-length
    minimum spacing on each lane."""
    cfg.validate()
    rng = np.random.default_rng([int(cfg.seed), _SPAWN_TAG])
    min_gap = CAR_EXTENT[0]
    lane_len = 2.0 * layout.arm_length_m

    lanes_by_axis = {"x": [], "y": []}
    for lane in layout.lanes:
        lanes_by_axis[lane.axis].append(lane)

    vehicles: list[VehicleState] = []
    for axis in ("x", "y"):
        lanes = lanes_by_axis[axis]
        if not lanes:
            continue
        expected_road = cfg.density_veh_km * (lane_len / 1000.0)
        expected_lane = expected_road / len(lanes)
        if expected_lane * min_gap > lane_len:
            raise ConfigurationError(
                f"density_veh_km={cfg.density_veh_km} infeasible: expected "
                f"{expected_lane:.1f} vehicles on a {lane_len:.0f} m lane with "
                f"{min_gap:.0f} m minimum spacing"
            )
        n_road = int(rng.poisson(expected_road))
        lane_pick = rng.integers(0, len(lanes), size=n_road)
        for li, lane in enumerate(lanes):
            n = int((lane_pick == li).sum())
            if n == 0:
                continue
            slack = lane_len - (n - 1) * min_gap
            if slack < 0:
                raise ConfigurationError(
                    f"drawn {n} vehicles exceed lane capacity at {min_gap:.0f} m spacing"
                )
            u = np.sort(rng.uniform(0.0, slack, size=n))
            coords = u + min_gap * np.arange(n) - layout.arm_length_m
            tall = rng.random(n) < cfg.tall_fraction
            for k in range(n):
                extent = TALL_EXTENT if tall[k] else CAR_EXTENT
                vehicles.append(
                    VehicleState(
                        vid=len(vehicles),
                        position=lane.point(float(coords[k])),
                        heading=lane.heading(),
                        speed_mps=cfg.speed_mps,
                        extent=extent,
                    )
                )
    return vehicles


@dataclass(slots=True)
class MobilityState:
    """Carried across ticks: the seeded stream and pending turn decisions."""

    rng: np.random.Generator
    turn_probability: float = 0.25
    pending: dict[int, str] = field(default_factory=dict)

    @classmethod
    def from_seed(cls, seed: int, turn_probability: float = 0.25) -> "MobilityState":
        return cls(rng=np.random.default_rng([int(seed), _MOBILITY_TAG]),
                   turn_probability=turn_probability)


def _travel_frame(v: VehicleState) -> tuple[str, int, float, float]:
    """(axis, direction, travel coordinate, lateral offset) of the lane being driven."""
    hx, hy = v.heading
    if abs(hx) >= abs(hy):
        direction = 1 if hx > 0 else -1
        return "x", direction, v.position[0] * direction, v.position[1]
    direction = 1 if hy > 0 else -1
    return "y", direction, v.position[1] * direction, v.position[0]


def _point_of(axis: str, direction: int, c: float, lateral: float) -> tuple[float, float]:
    along = c * direction
    return (along, lateral) if axis == "x" else (lateral, along)


def _turn(axis: str, direction: int, c: float, lateral: float,
          heading: tuple[float, float], clockwise: bool):
    """Rotate onto the crossing road's lane passing through the current point."""
    px, py = _point_of(axis, direction, c, lateral)
    hx, hy = heading
    heading = (hy, -hx) if clockwise else (-hy, hx)
    axis = "y" if axis == "x" else "x"
    direction = 1 if (heading[0] + heading[1]) > 0 else -1
    lateral = px if axis == "y" else py
    c = (py if axis == "y" else px) * direction
    return axis, direction, c, lateral, heading


def step_mobility(vehicles: list[VehicleState], layout: RoadLayout, dt: float,
                  state: MobilityState) -> list[VehicleState]:
    """Advance every vehicle by dt at constant speed along its lane.

    At the intersection a seeded Bernoulli decides turn vs straight (left and
    right split evenly); a vehicle whose center reaches the scene edge respawns
    at the entry of a uniformly chosen lane carrying over leftover distance.
    Vehicle count and identities are conserved.
    """
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive: {dt}")
    a = layout.arm_length_m
    o = layout.lane_offset_m
    p_turn = state.turn_probability
    out: list[VehicleState] = []
    for v in vehicles:
        axis, direction, c, lateral = _travel_frame(v)
        heading = v.heading
        remaining = v.speed_mps * dt
        while True:
            # next event strictly ahead on this lane: turn lines, then the exit
            next_c = a
            kind = "exit"
            if c < -o:
                next_c, kind = -o, "decision"
            elif c < o:
                next_c, kind = o, "exec"
            if next_c - c >= remaining:
                c += remaining
                break
            remaining -= next_c - c
            c = next_c
            if kind == "decision":
                if v.vid not in state.pending:
                    r = float(state.rng.random())
                    if r < 0.5 * p_turn:
                        # right turn happens at this line (its target lane runs here)
                        axis, direction, c, lateral, heading = _turn(
                            axis, direction, c, lateral, heading, clockwise=True)
                    elif r < p_turn:
                        state.pending[v.vid] = "left"
                    else:
                        state.pending[v.vid] = "straight"
            elif kind == "exec":
                if state.pending.pop(v.vid, "straight") == "left":
                    axis, direction, c, lateral, heading = _turn(
                        axis, direction, c, lateral, heading, clockwise=False)
            else:  # exit: respawn at the entry of a uniformly chosen lane
                lane = layout.lanes[int(state.rng.integers(0, len(layout.lanes)))]
                state.pending.pop(v.vid, None)
                axis, direction = lane.axis, lane.direction
                lateral, heading = lane.offset, lane.heading()
                c = -a
        out.append(replace(v, position=_point_of(axis, direction, c, lateral), heading=heading))
    return out
