"""Independent geometry oracles for the billiard tests.

Everything here avoids the production intersection code on purpose: the
obstacle-membership predicate plus brute-force ray marching and bisection
are the ground truth the event-driven solver is checked against.
"""

import numpy as np

MARCH_STEP = 1e-4
BISECT_TOL = 1e-8


def nearest_odd(z):
    """Odd integer closest to z (ties resolve away from zero, +1 at 0)."""
    lo = 2 * np.floor((np.asarray(z, dtype=float) - 1.0) / 2.0) + 1
    hi = lo + 2
    pick_hi = (hi - z) <= (z - lo)
    return np.where(pick_hi, hi, lo)


def inside_obstacle(x, y):
    """Strict interior test against the unit squares at odd-integer centers."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (np.abs(x - nearest_odd(x)) < 0.5) & (np.abs(y - nearest_odd(y)) < 0.5)


def march_first_hit(px, py, vx, vy, step=MARCH_STEP, max_path=1e4, chunk=8192):
    """First boundary crossing of the ray, found by fine-step marching.

    Marches along the ray in increments of `step` until a sample falls
    strictly inside an obstacle, then bisects the crossing to BISECT_TOL.
    Returns (s, x, y, wall_name) or None if no sample is inside within
    max_path. `wall_name` matches the production labels, with hits within
    1e-9 of a corner called "Corner".
    """
    start = 0.0
    while start < max_path:
        n = min(chunk, int((max_path - start) / step) + 1)
        s = start + step * np.arange(1, n + 1)
        xs = px + s * vx
        ys = py + s * vy
        hit = np.flatnonzero(inside_obstacle(xs, ys))
        if hit.size:
            i = int(hit[0])
            s_in = float(s[i])
            s_out = s_in - step if i > 0 or start > 0.0 else 0.0
            return _refine(px, py, vx, vy, s_out, s_in)
        start += n * step
    return None


def _refine(px, py, vx, vy, s_out, s_in):
    while s_in - s_out > BISECT_TOL:
        mid = 0.5 * (s_out + s_in)
        if bool(inside_obstacle(px + mid * vx, py + mid * vy)):
            s_in = mid
        else:
            s_out = mid
    s = 0.5 * (s_out + s_in)
    x = px + s * vx
    y = py + s * vy
    cx = float(nearest_odd(x))
    cy = float(nearest_odd(y))
    # label by the wall plane the crossing sits on, given the travel direction
    gap_left = abs(x - (cx - 0.5))
    gap_right = abs(x - (cx + 0.5))
    gap_bottom = abs(y - (cy - 0.5))
    gap_top = abs(y - (cy + 0.5))
    gx = gap_left if vx > 0 else gap_right
    gy = gap_bottom if vy > 0 else gap_top
    if min(gap_left, gap_right) <= 1e-9 and min(gap_bottom, gap_top) <= 1e-9:
        wall = "Corner"
    elif gx <= gy:
        wall = "Left" if vx > 0 else "Right"
    else:
        wall = "Bottom" if vy > 0 else "Top"
    return s, x, y, wall, int(cx), int(cy)


def segment_enters_interior(p, q, samples=2000, margin=1e-9):
    """Dense-sampling check that the open segment avoids obstacle interiors."""
    u = np.linspace(0.0, 1.0, samples + 2)[1:-1]
    xs = p[0] + u * (q[0] - p[0])
    ys = p[1] + u * (q[1] - p[1])
    deep_x = np.abs(xs - nearest_odd(xs)) < 0.5 - margin
    deep_y = np.abs(ys - nearest_odd(ys)) < 0.5 - margin
    return bool(np.any(deep_x & deep_y))
