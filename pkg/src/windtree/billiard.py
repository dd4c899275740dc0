"""Event-driven billiard in a periodic forest of unit-square obstacles.

Unit squares are centered at every odd-integer lattice point, so the
obstacle nearest the origin to the north-east spans [0.5, 1.5] x [0.5, 1.5]
and adjacent squares are one unit apart. A point particle travels at unit
speed and reflects specularly off obstacle walls; time equals path length.

All functions here are pure: no shared mutable state, safe to call from
many threads or processes at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

WALL_TOL = 1e-9        # a point this close to a wall counts as on it
CORNER_TOL = 1e-9      # hits this close to a corner retro-reflect
MIN_FLIGHT = 1e-9      # shorter flights would re-hit the wall just departed
DEFAULT_HORIZON = 1e6  # path-length cap before declaring a corridor
SPEED_TOL = 1e-6       # tolerated deviation of |velocity| from 1


class NoHitWithinHorizon(Exception):
    """The ray met no obstacle within the horizon (corridor direction)."""


class DegenerateVelocity(ValueError):
    """Velocity norm deviates from 1 by more than SPEED_TOL."""


class Wall(Enum):
    LEFT = "Left"
    RIGHT = "Right"
    BOTTOM = "Bottom"
    TOP = "Top"
    CORNER = "Corner"


class Vec2(NamedTuple):
    x: float
    y: float

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


def unit(x: float, y: float) -> Vec2:
    """Rescale (x, y) to unit norm."""
    n = math.hypot(x, y)
    if n == 0.0 or not math.isfinite(n):
        raise DegenerateVelocity(f"cannot normalize ({x}, {y})")
    return Vec2(x / n, y / n)


@dataclass(frozen=True)
class ParticleState:
    """Position and unit velocity of the particle; elapsed_time is path length."""

    position: Vec2
    velocity: Vec2
    elapsed_time: float = 0.0

    def __post_init__(self):
        for v in (*self.position, *self.velocity, self.elapsed_time):
            if not math.isfinite(v):
                raise ValueError("particle state components must be finite")
        if abs(self.velocity.norm() - 1.0) > SPEED_TOL:
            raise DegenerateVelocity(
                f"|velocity| = {self.velocity.norm()!r} is not 1 within {SPEED_TOL}"
            )


def state_from_slope(slope: float, position: Vec2 = Vec2(0.0, 0.0)) -> ParticleState:
    """Particle at `position` moving with velocity proportional to (1, slope)."""
    return ParticleState(position=position, velocity=unit(1.0, slope))


def state_from_angle(theta: float, position: Vec2 = Vec2(0.0, 0.0)) -> ParticleState:
    """Particle at `position` moving at angle `theta` from the +x axis."""
    return ParticleState(position=position, velocity=unit(math.cos(theta), math.sin(theta)))


@dataclass(frozen=True)
class CollisionEvent:
    """One wall strike: where, when (cumulative path length), and how."""

    point: Vec2
    time: float
    wall: Wall
    obstacle_center: tuple[int, int]
    index: int


@dataclass
class TrajectoryLog:
    """Initial state plus the ordered collision events and post-bounce states."""

    initial: ParticleState
    events: list[CollisionEvent] = field(default_factory=list)
    post_collision_states: list[ParticleState] = field(default_factory=list)
    truncated: bool = False
    truncation_reason: Optional[str] = None

    def __len__(self) -> int:
        return len(self.events)

    def final_state(self) -> ParticleState:
        return self.post_collision_states[-1] if self.post_collision_states else self.initial

    def corner_count(self) -> int:
        return sum(1 for e in self.events if e.wall is Wall.CORNER)

    def event_points(self) -> np.ndarray:
        """(n, 2) array of collision points."""
        if not self.events:
            return np.empty((0, 2))
        return np.array([(e.point.x, e.point.y) for e in self.events])

    def event_times(self) -> np.ndarray:
        return np.array([e.time for e in self.events])

    def position_at_time(self, t: float) -> Vec2:
        """Position at path-time t, linearly interpolated between logged events.

        Beyond the last event the final free flight is extrapolated.
        """
        if t < self.initial.elapsed_time:
            raise ValueError("time precedes the initial state")
        prev_point = self.initial.position
        prev_time = self.initial.elapsed_time
        for event in self.events:
            if t <= event.time:
                seg = event.time - prev_time
                u = 0.0 if seg == 0.0 else (t - prev_time) / seg
                return Vec2(
                    prev_point.x + u * (event.point.x - prev_point.x),
                    prev_point.y + u * (event.point.y - prev_point.y),
                )
            prev_point = event.point
            prev_time = event.time
        state = self.final_state()
        dt = t - prev_time
        return Vec2(prev_point.x + dt * state.velocity.x, prev_point.y + dt * state.velocity.y)


def locate_cell(p: Vec2) -> tuple[int, int]:
    """Odd-integer center of the period-2 cell containing p.

    Each cell [2i, 2i+2) x [2j, 2j+2) holds the obstacle centered at
    (2i+1, 2j+1). Points exactly between two centers (even coordinates)
    round half away from zero; the origin itself resolves to +1.
    """
    return (_nearest_odd(p[0]), _nearest_odd(p[1]))


def _nearest_odd(x: float) -> int:
    lo = 2 * math.floor((x - 1.0) / 2.0) + 1  # greatest odd <= x
    hi = lo + 2
    d_lo = x - lo
    d_hi = hi - x
    if d_lo < d_hi:
        return lo
    if d_hi < d_lo:
        return hi
    # x is an even integer: round half away from zero, +1 at the origin
    return lo if x < 0 else hi


def reflect(v: Vec2, wall: Wall) -> Vec2:
    """Specular reflection on an axis-aligned wall; corners reverse both components."""
    x, y = _reflect_components(v[0], v[1], wall)
    return unit(x, y)


def _reflect_components(vx: float, vy: float, wall: Wall) -> tuple[float, float]:
    if wall is Wall.LEFT or wall is Wall.RIGHT:
        return -vx, vy
    if wall is Wall.BOTTOM or wall is Wall.TOP:
        return vx, -vy
    return -vx, -vy


# ---------------------------------------------------------------------------
# First-hit search: incremental walk over period-2 cells in ray order.
# Each cell holds exactly one obstacle, strictly inside the cell with a 0.5
# margin, so testing cells in entry order yields the globally first hit.
# ---------------------------------------------------------------------------

def _first_odd_at_least(z: float) -> float:
    return 2.0 * math.ceil((z - 1.0) / 2.0) + 1.0


def _last_odd_at_most(z: float) -> float:
    return 2.0 * math.floor((z - 1.0) / 2.0) + 1.0


def _first_hit(px, py, vx, vy, horizon):
    """First obstacle intersection of the ray from (px, py) along (vx, vy).

    Returns (s, hx, hy, wall, cx, cy) with s the path length, (hx, hy) the
    hit point snapped onto the wall plane, or None when nothing is struck
    within the horizon. Flights shorter than MIN_FLIGHT are ignored so the
    wall just departed is never re-hit; tangent grazes do not count as hits.
    """
    # Axis-parallel rays stay in one row/column: resolve in closed form.
    if vy == 0.0:
        cy = 2.0 * math.floor(py * 0.5) + 1.0
        if not (cy - 0.5 < py < cy + 0.5):
            return None  # corridor between obstacle rows
        if vx > 0.0:
            cx = _first_odd_at_least(px + 0.5 + MIN_FLIGHT)
            hx, wall = cx - 0.5, Wall.LEFT
        else:
            cx = _last_odd_at_most(px - 0.5 - MIN_FLIGHT)
            hx, wall = cx + 0.5, Wall.RIGHT
        s = (hx - px) / vx
        if s > horizon:
            return None
        return s, hx, py, _classify_flat(wall, py, cy), int(cx), int(cy)
    if vx == 0.0:
        cx = 2.0 * math.floor(px * 0.5) + 1.0
        if not (cx - 0.5 < px < cx + 0.5):
            return None
        if vy > 0.0:
            cy = _first_odd_at_least(py + 0.5 + MIN_FLIGHT)
            hy, wall = cy - 0.5, Wall.BOTTOM
        else:
            cy = _last_odd_at_most(py - 0.5 - MIN_FLIGHT)
            hy, wall = cy + 0.5, Wall.TOP
        s = (hy - py) / vy
        if s > horizon:
            return None
        return s, px, hy, _classify_flat(wall, px, cx), int(cx), int(cy)

    inv_vx = 1.0 / vx
    inv_vy = 1.0 / vy
    ix = math.floor(px * 0.5)
    iy = math.floor(py * 0.5)
    if vx > 0.0:
        step_x, t_max_x = 1, (2.0 * ix + 2.0 - px) * inv_vx
    else:
        step_x, t_max_x = -1, (2.0 * ix - px) * inv_vx
    if vy > 0.0:
        step_y, t_max_y = 1, (2.0 * iy + 2.0 - py) * inv_vy
    else:
        step_y, t_max_y = -1, (2.0 * iy - py) * inv_vy
    t_delta_x = abs(2.0 * inv_vx)
    t_delta_y = abs(2.0 * inv_vy)

    t_entry = 0.0
    while t_entry <= horizon:
        cx = 2.0 * ix + 1.0
        cy = 2.0 * iy + 1.0
        tx1 = (cx - 0.5 - px) * inv_vx
        tx2 = (cx + 0.5 - px) * inv_vx
        if tx1 > tx2:
            tx1, tx2 = tx2, tx1
        ty1 = (cy - 0.5 - py) * inv_vy
        ty2 = (cy + 0.5 - py) * inv_vy
        if ty1 > ty2:
            ty1, ty2 = ty2, ty1
        t_near = tx1 if tx1 > ty1 else ty1
        t_far = tx2 if tx2 < ty2 else ty2
        # strict t_near < t_far drops tangencies (zero normal velocity)
        if MIN_FLIGHT <= t_near < t_far and t_near <= horizon:
            return _classify_hit(px, py, vx, vy, t_near, tx1, ty1, cx, cy)
        if t_max_x < t_max_y:
            t_entry = t_max_x
            t_max_x += t_delta_x
            ix += step_x
        elif t_max_y < t_max_x:
            t_entry = t_max_y
            t_max_y += t_delta_y
            iy += step_y
        else:
            # exact cell-corner crossing: obstacles sit 0.5 inside each cell,
            # so skipping the two side cells cannot miss a hit
            t_entry = t_max_x
            t_max_x += t_delta_x
            t_max_y += t_delta_y
            ix += step_x
            iy += step_y
    return None


def _classify_flat(wall, coord, center):
    """Corner promotion for axis-parallel hits running along one wall band."""
    near_lo = abs(coord - (center - 0.5)) <= CORNER_TOL
    near_hi = abs(coord - (center + 0.5)) <= CORNER_TOL
    return Wall.CORNER if (near_lo or near_hi) else wall


def _classify_hit(px, py, vx, vy, s, tx1, ty1, cx, cy):
    """Snap the hit onto its wall plane and label it, promoting near-corner hits."""
    if tx1 > ty1:
        hx = cx - 0.5 if vx > 0.0 else cx + 0.5
        hy = py + s * vy
        wall = Wall.LEFT if vx > 0.0 else Wall.RIGHT
        lo, hi = cy - 0.5, cy + 0.5
        if abs(hy - lo) <= CORNER_TOL:
            hy, wall = lo, Wall.CORNER
        elif abs(hy - hi) <= CORNER_TOL:
            hy, wall = hi, Wall.CORNER
    elif ty1 > tx1:
        hy = cy - 0.5 if vy > 0.0 else cy + 0.5
        hx = px + s * vx
        wall = Wall.BOTTOM if vy > 0.0 else Wall.TOP
        lo, hi = cx - 0.5, cx + 0.5
        if abs(hx - lo) <= CORNER_TOL:
            hx, wall = lo, Wall.CORNER
        elif abs(hx - hi) <= CORNER_TOL:
            hx, wall = hi, Wall.CORNER
    else:
        # entry exactly through a corner point
        hx = cx - 0.5 if vx > 0.0 else cx + 0.5
        hy = cy - 0.5 if vy > 0.0 else cy + 0.5
        wall = Wall.CORNER
    return s, hx, hy, wall, int(cx), int(cy)


def next_collision(state: ParticleState, horizon: float = DEFAULT_HORIZON) -> CollisionEvent:
    """First wall strike of the ray from `state`, or NoHitWithinHorizon.

    If the position lies on an obstacle wall, that wall is excluded from
    candidacy at path length < MIN_FLIGHT.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if abs(state.velocity.norm() - 1.0) > SPEED_TOL:
        raise DegenerateVelocity(f"|velocity| = {state.velocity.norm()!r}")
    hit = _first_hit(state.position.x, state.position.y,
                     state.velocity.x, state.velocity.y, horizon)
    if hit is None:
        raise NoHitWithinHorizon(
            f"no obstacle within path length {horizon:g} from {tuple(state.position)}"
        )
    s, hx, hy, wall, cx, cy = hit
    return CollisionEvent(
        point=Vec2(hx, hy),
        time=state.elapsed_time + s,
        wall=wall,
        obstacle_center=(cx, cy),
        index=1,
    )


def point_in_obstacle(x: float, y: float, shrink: float = 0.0) -> bool:
    """True when (x, y) lies strictly inside an obstacle shrunk by `shrink`."""
    cx = _nearest_odd(x)
    cy = _nearest_odd(y)
    return abs(x - cx) < 0.5 - shrink and abs(y - cy) < 0.5 - shrink


def _normalize_on_wall(px, py, vx, vy):
    """Reflect in place a velocity that points into the obstacle whose wall
    the position sits on (within WALL_TOL). Needed so velocity-reversed
    post-collision states retrace instead of tunneling; not a logged event.
    """
    cx = float(_nearest_odd(px))
    cy = float(_nearest_odd(py))
    in_x_span = (cx - 0.5) - WALL_TOL <= px <= (cx + 0.5) + WALL_TOL
    in_y_span = (cy - 0.5) - WALL_TOL <= py <= (cy + 0.5) + WALL_TOL
    flip_x = in_y_span and (
        (abs(px - (cx - 0.5)) <= WALL_TOL and vx > 0.0)
        or (abs(px - (cx + 0.5)) <= WALL_TOL and vx < 0.0)
    )
    flip_y = in_x_span and (
        (abs(py - (cy - 0.5)) <= WALL_TOL and vy > 0.0)
        or (abs(py - (cy + 0.5)) <= WALL_TOL and vy < 0.0)
    )
    return (-vx if flip_x else vx), (-vy if flip_y else vy)


def simulate(initial: ParticleState, n_collisions: int,
             horizon: float = DEFAULT_HORIZON) -> TrajectoryLog:
    """Run the particle through `n_collisions` wall strikes.

    The log is truncated (with a recorded reason) if a corridor direction
    exhausts the horizon first. An initial position on a wall with inward
    velocity is reflected in place before the first flight.
    """
    if n_collisions < 0:
        raise ValueError("n_collisions must be >= 0")
    px, py = initial.position
    if point_in_obstacle(px, py, shrink=WALL_TOL):
        raise ValueError(f"initial position {tuple(initial.position)} is inside an obstacle")
    vx, vy = _normalize_on_wall(px, py, initial.velocity.x, initial.velocity.y)
    t = initial.elapsed_time

    events: list[CollisionEvent] = []
    posts: list[ParticleState] = []
    log = TrajectoryLog(initial=initial, events=events, post_collision_states=posts)
    for k in range(1, n_collisions + 1):
        hit = _first_hit(px, py, vx, vy, horizon)
        if hit is None:
            log.truncated = True
            log.truncation_reason = (
                f"no obstacle within horizon {horizon:g} after {k - 1} collisions"
            )
            break
        s, hx, hy, wall, cx, cy = hit
        t += s
        events.append(CollisionEvent(Vec2(hx, hy), t, wall, (cx, cy), k))
        rx, ry = _reflect_components(vx, vy, wall)
        n = math.hypot(rx, ry)
        vx, vy = rx / n, ry / n
        px, py = hx, hy
        posts.append(ParticleState(Vec2(px, py), Vec2(vx, vy), t))
    return log


def distance_series(log: TrajectoryLog) -> np.ndarray:
    """Euclidean distance of each collision point from the origin."""
    pts = log.event_points()
    return np.hypot(pts[:, 0], pts[:, 1])


def segment_blocked(p: Vec2, q: Vec2, margin: float = WALL_TOL) -> bool:
    """True when the segment p->q passes through an obstacle interior.

    Obstacles are shrunk by `margin`, so endpoints sitting exactly on walls
    do not count. Used as a free-flight validity check on logged segments.
    """
    dx = q[0] - p[0]
    dy = q[1] - p[1]
    length = math.hypot(dx, dy)
    half = 0.5 - margin
    for cx, cy in _cells_near_segment(p, q, length):
        if dx == 0.0:
            if not (cx - half < p[0] < cx + half):
                continue
            u1, u2 = -math.inf, math.inf
        else:
            u1 = (cx - half - p[0]) / dx
            u2 = (cx + half - p[0]) / dx
            if u1 > u2:
                u1, u2 = u2, u1
        if dy == 0.0:
            if not (cy - half < p[1] < cy + half):
                continue
            v1, v2 = -math.inf, math.inf
        else:
            v1 = (cy - half - p[1]) / dy
            v2 = (cy + half - p[1]) / dy
            if v1 > v2:
                v1, v2 = v2, v1
        near = max(u1, v1, 0.0)
        far = min(u2, v2, 1.0)
        if near < far:
            return True
    return False


def _cells_near_segment(p: Vec2, q: Vec2, length: float):
    """Candidate obstacle centers within one cell of the segment."""
    seen = set()
    n_samples = max(2, int(length / 0.5) + 2)
    for i in range(n_samples + 1):
        u = i / n_samples
        x = p[0] + u * (q[0] - p[0])
        y = p[1] + u * (q[1] - p[1])
        cx0 = _nearest_odd(x)
        cy0 = _nearest_odd(y)
        for cx in (cx0 - 2, cx0, cx0 + 2):
            for cy in (cy0 - 2, cy0, cy0 + 2):
                seen.add((cx, cy))
    return seen
