"""Numba-compiled numerical core.

Every geometric/dynamic primitive lives here exactly once: the public API
functions in `geometry`, `avoidance` and `navigation` call these scalar
helpers directly, and the engine's batch kernels inline the same helpers,
so the two paths cannot drift apart.

All batch kernels write one output slot per agent/beam with no cross-slot
reductions, which makes results bit-identical for any thread count.
"""

import math

import numba
import numpy as np
from numba import njit, prange

# workqueue is always available and keeps the parallel layer identical
# across machines; kernels are slot-parallel so any layer is deterministic
numba.config.THREADING_LAYER = "workqueue"

INF = math.inf

# Epsilon for parallel-line / tangency discriminants in ray intersection.
GEOM_EPS = 1e-12
# Epsilon used by the incremental linear program (matches the customary
# value for this 2-D LP formulation).
LP_EPS = 1e-5


# ---------------------------------------------------------------------------
# ray intersection primitives
# ---------------------------------------------------------------------------

@njit(cache=True)
def ray_segment_t(ox, oy, dx, dy, ax, ay, bx, by):
    """Smallest t > 0 with (ox,oy) + t*(dx,dy) on segment AB, or inf."""
    ex = bx - ax
    ey = by - ay
    denom = dx * ey - dy * ex
    if abs(denom) <= GEOM_EPS:
        return INF
    qx = ax - ox
    qy = ay - oy
    t = (qx * ey - qy * ex) / denom
    s = (qx * dy - qy * dx) / denom
    if t > 0.0 and 0.0 <= s <= 1.0:
        return t
    return INF


@njit(cache=True)
def ray_disc_t(ox, oy, dx, dy, cx, cy, r):
    """Smallest t > 0 with the unit ray hitting circle (c, r), or inf."""
    mx = cx - ox
    my = cy - oy
    b = mx * dx + my * dy
    c = mx * mx + my * my - r * r
    disc = b * b - c
    if disc < GEOM_EPS:
        return INF
    sq = math.sqrt(disc)
    t = b - sq
    if t > 0.0:
        return t
    t = b + sq
    if t > 0.0:
        return t
    return INF


@njit(cache=True)
def seg_closest_point(ax, ay, bx, by, px, py):
    """Closest point to P on segment AB."""
    ex = bx - ax
    ey = by - ay
    ll = ex * ex + ey * ey
    if ll <= 0.0:
        return ax, ay
    s = ((px - ax) * ex + (py - ay) * ey) / ll
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    return ax + s * ex, ay + s * ey


@njit(cache=True)
def seg_point_dist(ax, ay, bx, by, px, py):
    qx, qy = seg_closest_point(ax, ay, bx, by, px, py)
    return math.hypot(px - qx, py - qy)


@njit(cache=True, parallel=True)
def scan_kernel(ox, oy, heading, angles, max_range, segs, disc_xy, disc_r):
    """Batch raycast for one scan; inf marks beams with no hit in range."""
    n = angles.shape[0]
    out = np.empty(n, np.float64)
    for k in prange(n):
        a = heading + angles[k]
        dx = math.cos(a)
        dy = math.sin(a)
        best = INF
        for i in range(segs.shape[0]):
            t = ray_segment_t(ox, oy, dx, dy, segs[i, 0], segs[i, 1],
                              segs[i, 2], segs[i, 3])
            if t < best:
                best = t
        for i in range(disc_xy.shape[0]):
            t = ray_disc_t(ox, oy, dx, dy, disc_xy[i, 0], disc_xy[i, 1],
                           disc_r[i])
            if t < best:
                best = t
        if best > max_range:
            best = INF
        out[k] = best
    return out


# ---------------------------------------------------------------------------
# ORCA: half-plane construction and the incremental linear program
# ---------------------------------------------------------------------------

@njit(cache=True)
def pair_fallback_dir(id_a, id_b):
    """Deterministic unit vector for exactly-coincident degenerate pairs."""
    h = (id_a * np.int64(2654435761) + id_b * np.int64(40503)) & np.int64(0xFFFFFFFF)
    ang = (h % np.int64(6283)) / 1000.0
    return math.cos(ang), math.sin(ang)


@njit(cache=True)
def agent_orca_line(px, py, vx, vy, ri, id_i, qx, qy, wx, wy, rj, id_j,
                    inv_tau, inv_dt):
    """ORCA half-plane of agent i against neighbor j, responsibility 1/2.

    Returns (point_x, point_y, dir_x, dir_y); the feasible side is the left
    half-plane of the direction vector.
    """
    rel_px = qx - px
    rel_py = qy - py
    rel_vx = vx - wx
    rel_vy = vy - wy
    dist_sq = rel_px * rel_px + rel_py * rel_py
    r = ri + rj
    r_sq = r * r

    if dist_sq > r_sq:
        # no current overlap: truncated-cone velocity obstacle
        wwx = rel_vx - inv_tau * rel_px
        wwy = rel_vy - inv_tau * rel_py
        w_len_sq = wwx * wwx + wwy * wwy
        dot1 = wwx * rel_px + wwy * rel_py
        if dot1 < 0.0 and dot1 * dot1 > r_sq * w_len_sq:
            # project on the cutoff arc
            w_len = math.sqrt(w_len_sq)
            ux = wwx / w_len
            uy = wwy / w_len
            dir_x = uy
            dir_y = -ux
            scale = r * inv_tau - w_len
            u_x = scale * ux
            u_y = scale * uy
        else:
            # project on a leg; ties go to the left leg
            leg = math.sqrt(dist_sq - r_sq)
            if rel_px * wwy - rel_py * wwx >= 0.0:
                dir_x = (rel_px * leg - rel_py * r) / dist_sq
                dir_y = (rel_px * r + rel_py * leg) / dist_sq
            else:
                dir_x = -(rel_px * leg + rel_py * r) / dist_sq
                dir_y = -(-rel_px * r + rel_py * leg) / dist_sq
            dot2 = rel_vx * dir_x + rel_vy * dir_y
            u_x = dot2 * dir_x - rel_vx
            u_y = dot2 * dir_y - rel_vy
    else:
        # already overlapping: resolve within one timestep
        wwx = rel_vx - inv_dt * rel_px
        wwy = rel_vy - inv_dt * rel_py
        w_len = math.sqrt(wwx * wwx + wwy * wwy)
        if w_len > 1e-12:
            ux = wwx / w_len
            uy = wwy / w_len
        elif dist_sq > 1e-18:
            d = math.sqrt(dist_sq)
            ux = -rel_px / d
            uy = -rel_py / d
        else:
            ux, uy = pair_fallback_dir(id_i, id_j)
        dir_x = uy
        dir_y = -ux
        scale = r * inv_dt - w_len
        u_x = scale * ux
        u_y = scale * uy

    return vx + 0.5 * u_x, vy + 0.5 * u_y, dir_x, dir_y


@njit(cache=True)
def _disc_tangent(cx, cy, rho, left):
    """Tangency point of the tangent ray from the origin to circle (c, rho)."""
    c_sq = cx * cx + cy * cy
    l_sq = c_sq - rho * rho
    if l_sq < 0.0:
        l_sq = 0.0
    l = math.sqrt(l_sq)
    if left:
        tx = (l_sq * cx - rho * l * cy) / c_sq
        ty = (l_sq * cy + rho * l * cx) / c_sq
    else:
        tx = (l_sq * cx + rho * l * cy) / c_sq
        ty = (l_sq * cy - rho * l * cx) / c_sq
    return tx, ty


@njit(cache=True)
def obstacle_orca_line(px, py, vx, vy, ri, ax, ay, bx, by, inv_tau, inv_dt):
    """ORCA half-plane of an agent against wall segment AB, full responsibility.

    The velocity obstacle is the cone shadow of the capsule (segment dilated
    by the agent radius) scaled by 1/time_horizon; the half-plane supports it
    at the boundary point nearest the current velocity.
    """
    qx, qy = seg_closest_point(ax, ay, bx, by, px, py)
    d0 = math.hypot(px - qx, py - qy)

    if d0 <= ri:
        # already touching/penetrating the wall: escape within one timestep
        cx = (qx - px) * inv_dt
        cy = (qy - py) * inv_dt
        wwx = vx - cx
        wwy = vy - cy
        w_len = math.hypot(wwx, wwy)
        if w_len > 1e-12:
            nx = wwx / w_len
            ny = wwy / w_len
        elif d0 > 1e-12:
            nx = (px - qx) / d0
            ny = (py - qy) / d0
        else:
            # center exactly on the wall line: use the wall's left normal
            ex = bx - ax
            ey = by - ay
            el = math.hypot(ex, ey)
            nx = -ey / el
            ny = ex / el
        scale = ri * inv_dt - w_len
        ux = scale * nx
        uy = scale * ny
        return vx + ux, vy + uy, ny, -nx

    # capsule in velocity space
    p1x = (ax - px) * inv_tau
    p1y = (ay - py) * inv_tau
    p2x = (bx - px) * inv_tau
    p2y = (by - py) * inv_tau
    rho = ri * inv_tau

    # candidate 1: nearest point on the capsule boundary, valid on the near side
    sx, sy = seg_closest_point(p1x, p1y, p2x, p2y, vx, vy)
    ex = vx - sx
    ey = vy - sy
    el = math.hypot(ex, ey)
    if el > 1e-12:
        n1x = ex / el
        n1y = ey / el
    else:
        # velocity exactly on the capsule axis: push away from the wall
        n1x = (px - qx) / d0
        n1y = (py - qy) / d0
    c1x = sx + rho * n1x
    c1y = sy + rho * n1y

    best = INF
    bcx = 0.0
    bcy = 0.0
    bnx = 0.0
    bny = 0.0
    if n1x * c1x + n1y * c1y < 0.0:
        best = (c1x - vx) ** 2 + (c1y - vy) ** 2
        bcx = c1x
        bcy = c1y
        bnx = n1x
        bny = n1y

    # candidates 2+3: the tangent legs of the cone (rays from the tangency
    # points outward); the hull tangent touches one of the two end discs
    for side in range(2):
        left = side == 0
        t1x, t1y = _disc_tangent(p1x, p1y, rho, left)
        t2x, t2y = _disc_tangent(p2x, p2y, rho, left)
        if left:
            take2 = t1x * t2y - t1y * t2x > 0.0
        else:
            take2 = t1x * t2y - t1y * t2x < 0.0
        if take2:
            tx, ty = t2x, t2y
        else:
            tx, ty = t1x, t1y
        tt = tx * tx + ty * ty
        s = (vx * tx + vy * ty) / tt
        if s < 1.0:
            s = 1.0
        ccx = s * tx
        ccy = s * ty
        d2 = (ccx - vx) ** 2 + (ccy - vy) ** 2
        if d2 < best:
            best = d2
            bcx = ccx
            bcy = ccy
            tl = math.sqrt(tt)
            if left:
                bnx = -ty / tl
                bny = tx / tl
            else:
                bnx = ty / tl
                bny = -tx / tl

    return bcx, bcy, bny, -bnx


@njit(cache=True)
def lp1(lines, line_no, radius, opt_x, opt_y, dir_opt, rx, ry):
    """Optimize along constraint boundary `line_no` subject to earlier lines."""
    px = lines[line_no, 0]
    py = lines[line_no, 1]
    dx = lines[line_no, 2]
    dy = lines[line_no, 3]
    dot_pd = px * dx + py * dy
    disc = dot_pd * dot_pd + radius * radius - (px * px + py * py)
    if disc < 0.0:
        return False, rx, ry
    sq = math.sqrt(disc)
    t_left = -dot_pd - sq
    t_right = -dot_pd + sq

    for i in range(line_no):
        qx = lines[i, 0]
        qy = lines[i, 1]
        ex = lines[i, 2]
        ey = lines[i, 3]
        denom = dx * ey - dy * ex
        numer = ex * (py - qy) - ey * (px - qx)
        if abs(denom) <= LP_EPS:
            if numer < 0.0:
                return False, rx, ry
            continue
        t = numer / denom
        if denom >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return False, rx, ry

    if dir_opt:
        if opt_x * dx + opt_y * dy > 0.0:
            t = t_right
        else:
            t = t_left
    else:
        t = dx * (opt_x - px) + dy * (opt_y - py)
        if t < t_left:
            t = t_left
        elif t > t_right:
            t = t_right
    return True, px + t * dx, py + t * dy


@njit(cache=True)
def lp2(lines, radius, opt_x, opt_y, dir_opt):
    """Incremental 2-D LP over half-planes inside the speed disc.

    Returns (fail_index, x, y); fail_index == len(lines) on success.
    """
    if dir_opt:
        rx = opt_x * radius
        ry = opt_y * radius
    elif opt_x * opt_x + opt_y * opt_y > radius * radius:
        n = math.hypot(opt_x, opt_y)
        rx = opt_x / n * radius
        ry = opt_y / n * radius
    else:
        rx = opt_x
        ry = opt_y

    for i in range(lines.shape[0]):
        if lines[i, 2] * (lines[i, 1] - ry) - lines[i, 3] * (lines[i, 0] - rx) > 0.0:
            ok, nx, ny = lp1(lines, i, radius, opt_x, opt_y, dir_opt, rx, ry)
            if not ok:
                return i, rx, ry
            rx = nx
            ry = ny
    return lines.shape[0], rx, ry


@njit(cache=True)
def lp3(lines, num_fixed, begin, radius, rx, ry):
    """Fallback: minimize the largest violation, keeping the first
    `num_fixed` lines (walls) hard."""
    distance = 0.0
    for i in range(begin, lines.shape[0]):
        if lines[i, 2] * (lines[i, 1] - ry) - lines[i, 3] * (lines[i, 0] - rx) > distance:
            proj = np.empty((max(i, num_fixed), 4), np.float64)
            for k in range(num_fixed):
                proj[k, 0] = lines[k, 0]
                proj[k, 1] = lines[k, 1]
                proj[k, 2] = lines[k, 2]
                proj[k, 3] = lines[k, 3]
            cnt = num_fixed
            for j in range(num_fixed, i):
                denom = lines[i, 2] * lines[j, 3] - lines[i, 3] * lines[j, 2]
                if abs(denom) <= LP_EPS:
                    if lines[i, 2] * lines[j, 2] + lines[i, 3] * lines[j, 3] > 0.0:
                        continue
                    ppx = 0.5 * (lines[i, 0] + lines[j, 0])
                    ppy = 0.5 * (lines[i, 1] + lines[j, 1])
                else:
                    t = (lines[j, 2] * (lines[i, 1] - lines[j, 1])
                         - lines[j, 3] * (lines[i, 0] - lines[j, 0])) / denom
                    ppx = lines[i, 0] + t * lines[i, 2]
                    ppy = lines[i, 1] + t * lines[i, 3]
                ddx = lines[j, 2] - lines[i, 2]
                ddy = lines[j, 3] - lines[i, 3]
                nl = math.hypot(ddx, ddy)
                proj[cnt, 0] = ppx
                proj[cnt, 1] = ppy
                proj[cnt, 2] = ddx / nl
                proj[cnt, 3] = ddy / nl
                cnt += 1
            fail, nx, ny = lp2(proj[:cnt], radius, -lines[i, 3], lines[i, 2], True)
            if fail == cnt:
                rx = nx
                ry = ny
            distance = lines[i, 2] * (lines[i, 1] - ry) - lines[i, 3] * (lines[i, 0] - rx)
    return rx, ry


@njit(cache=True)
def solve_lines(lines, num_fixed, pref_x, pref_y, max_speed):
    fail, rx, ry = lp2(lines, max_speed, pref_x, pref_y, False)
    if fail < lines.shape[0]:
        rx, ry = lp3(lines, num_fixed, fail, max_speed, rx, ry)
    return rx, ry


@njit(cache=True, parallel=True)
def orca_step_kernel(pos, vel, rad, vmax, ids, ped_rows, pref,
                     nbr, nbr_n, segs, tau, tau_obst, dt):
    """New velocities for all avoidance-running agents in one tick.

    `nbr` holds neighbor row indices per pedestrian (ascending agent id),
    `nbr_n` the per-row counts. Wall candidates are scanned inline; wall
    lines precede agent lines and stay hard in the infeasible fallback.
    """
    inv_tau = 1.0 / tau
    inv_tau_obst = 1.0 / tau_obst
    inv_dt = 1.0 / dt
    n_seg = segs.shape[0]
    out = np.empty((ped_rows.shape[0], 2), np.float64)

    for p in prange(ped_rows.shape[0]):
        i = ped_rows[p]
        px = pos[i, 0]
        py = pos[i, 1]
        vx = vel[i, 0]
        vy = vel[i, 1]
        cutoff = rad[i] + vmax[i] * tau_obst

        cand = np.empty(n_seg, np.int64)
        n_obst = 0
        for s in range(n_seg):
            if seg_point_dist(segs[s, 0], segs[s, 1], segs[s, 2], segs[s, 3],
                              px, py) <= cutoff:
                cand[n_obst] = s
                n_obst += 1

        k = nbr_n[p]
        lines = np.empty((n_obst + k, 4), np.float64)
        for c in range(n_obst):
            s = cand[c]
            lx, ly, ldx, ldy = obstacle_orca_line(
                px, py, vx, vy, rad[i], segs[s, 0], segs[s, 1],
                segs[s, 2], segs[s, 3], inv_tau_obst, inv_dt)
            lines[c, 0] = lx
            lines[c, 1] = ly
            lines[c, 2] = ldx
            lines[c, 3] = ldy
        for c in range(k):
            j = nbr[p, c]
            lx, ly, ldx, ldy = agent_orca_line(
                px, py, vx, vy, rad[i], ids[i],
                pos[j, 0], pos[j, 1], vel[j, 0], vel[j, 1], rad[j], ids[j],
                inv_tau, inv_dt)
            lines[n_obst + c, 0] = lx
            lines[n_obst + c, 1] = ly
            lines[n_obst + c, 2] = ldx
            lines[n_obst + c, 3] = ldy

        rx, ry = solve_lines(lines, n_obst, pref[p, 0], pref[p, 1], vmax[i])
        out[p, 0] = rx
        out[p, 1] = ry
    return out


# ---------------------------------------------------------------------------
# social force
# ---------------------------------------------------------------------------

@njit(cache=True)
def sf_neighbor_force(px, py, ri, id_i, qx, qy, rj, id_j, a, b):
    """Exponential repulsion from one neighbor."""
    dx = px - qx
    dy = py - qy
    d = math.hypot(dx, dy)
    if d < 1e-9:
        nx, ny = pair_fallback_dir(id_i, id_j)
        d = 0.0
    else:
        nx = dx / d
        ny = dy / d
    mag = a * math.exp((ri + rj - d) / b)
    return mag * nx, mag * ny


@njit(cache=True)
def sf_wall_force(px, py, ri, ax, ay, bx, by, wall_a, wall_b):
    """Exponential repulsion from the nearest point of a wall segment."""
    qx, qy = seg_closest_point(ax, ay, bx, by, px, py)
    dx = px - qx
    dy = py - qy
    d = math.hypot(dx, dy)
    if d < 1e-9:
        ex = bx - ax
        ey = by - ay
        el = math.hypot(ex, ey)
        nx = -ey / el
        ny = ex / el
        d = 0.0
    else:
        nx = dx / d
        ny = dy / d
    mag = wall_a * math.exp((ri - d) / wall_b)
    return mag * nx, mag * ny


@njit(cache=True, parallel=True)
def sf_step_kernel(pos, vel, rad, vmax, ids, is_robot, ped_rows, pref,
                   nbr_flat, nbr_off, segs, tau, a, b, wall_a, wall_b,
                   robot_factor, neighbor_dist, dt):
    """Social-force velocity update for all pedestrians in one tick."""
    out = np.empty((ped_rows.shape[0], 2), np.float64)
    for p in prange(ped_rows.shape[0]):
        i = ped_rows[p]
        px = pos[i, 0]
        py = pos[i, 1]
        fx = (pref[p, 0] - vel[i, 0]) / tau
        fy = (pref[p, 1] - vel[i, 1]) / tau
        for c in range(nbr_off[p], nbr_off[p + 1]):
            j = nbr_flat[c]
            aj = a * robot_factor if is_robot[j] else a
            gx, gy = sf_neighbor_force(px, py, rad[i], ids[i],
                                       pos[j, 0], pos[j, 1], rad[j], ids[j],
                                       aj, b)
            fx += gx
            fy += gy
        for s in range(segs.shape[0]):
            if seg_point_dist(segs[s, 0], segs[s, 1], segs[s, 2], segs[s, 3],
                              px, py) <= neighbor_dist:
                gx, gy = sf_wall_force(px, py, rad[i], segs[s, 0], segs[s, 1],
                                       segs[s, 2], segs[s, 3], wall_a, wall_b)
                fx += gx
                fy += gy
        nvx = vel[i, 0] + dt * fx
        nvy = vel[i, 1] + dt * fy
        speed = math.hypot(nvx, nvy)
        if speed > vmax[i]:
            nvx = nvx / speed * vmax[i]
            nvy = nvy / speed * vmax[i]
        out[p, 0] = nvx
        out[p, 1] = nvy
    return out


# ---------------------------------------------------------------------------
# potential field
# ---------------------------------------------------------------------------

@njit(cache=True)
def pf_gradient(px, py, gx, gy, segs, k_att, k_rep, rho0):
    """Negative gradient of the attractive+repulsive potential, unclamped.

    Also returns the smallest wall clearance encountered.
    """
    out_x = -k_att * (px - gx)
    out_y = -k_att * (py - gy)
    min_rho = INF
    for s in range(segs.shape[0]):
        qx, qy = seg_closest_point(segs[s, 0], segs[s, 1], segs[s, 2],
                                   segs[s, 3], px, py)
        dx = px - qx
        dy = py - qy
        rho = math.hypot(dx, dy)
        if rho < min_rho:
            min_rho = rho
        if rho < rho0 and rho > 1e-12:
            coef = k_rep * (1.0 / rho - 1.0 / rho0) / (rho * rho)
            out_x += coef * dx / rho
            out_y += coef * dy / rho
    return out_x, out_y, min_rho


@njit(cache=True, parallel=True)
def pf_step_kernel(pos, ped_rows, goals, pref_speed, segs, k_att, k_rep, rho0):
    """Potential-field preferred velocities for all pedestrians."""
    out = np.empty((ped_rows.shape[0], 2), np.float64)
    for p in prange(ped_rows.shape[0]):
        i = ped_rows[p]
        gx, gy, min_rho = pf_gradient(pos[i, 0], pos[i, 1],
                                      goals[p, 0], goals[p, 1],
                                      segs, k_att, k_rep, rho0)
        if min_rho < 1e-6:
            # touching a wall: pure repulsion at preferred speed
            n = math.hypot(gx, gy)
            if n > 0.0:
                out[p, 0] = gx / n * pref_speed[p]
                out[p, 1] = gy / n * pref_speed[p]
            else:
                out[p, 0] = 0.0
                out[p, 1] = 0.0
            continue
        n = math.hypot(gx, gy)
        if n > pref_speed[p] and n > 0.0:
            gx = gx / n * pref_speed[p]
            gy = gy / n * pref_speed[p]
        out[p, 0] = gx
        out[p, 1] = gy
    return out


# ---------------------------------------------------------------------------
# path following and goal-field descent
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def follow_kernel(pos, ped_rows, wp_flat, wp_off, pref_speed, goal_tol, lookahead):
    """Pure-pursuit along per-agent waypoint polylines.

    Returns preferred velocities and the distance from each agent to its
    path (used to trigger replanning).
    """
    out = np.empty((ped_rows.shape[0], 2), np.float64)
    stray = np.empty(ped_rows.shape[0], np.float64)
    for p in prange(ped_rows.shape[0]):
        i = ped_rows[p]
        px = pos[i, 0]
        py = pos[i, 1]
        lo = wp_off[p]
        hi = wp_off[p + 1]
        n = hi - lo
        if n == 0:
            out[p, 0] = 0.0
            out[p, 1] = 0.0
            stray[p] = 0.0
            continue
        lx = wp_flat[hi - 1, 0]
        ly = wp_flat[hi - 1, 1]
        if math.hypot(px - lx, py - ly) <= goal_tol[p]:
            out[p, 0] = 0.0
            out[p, 1] = 0.0
            stray[p] = 0.0
            continue
        # locate the nearest point on the polyline and its arc position
        best_d = math.hypot(px - wp_flat[lo, 0], py - wp_flat[lo, 1])
        best_arc = 0.0
        arc = 0.0
        for w in range(lo, hi - 1):
            ax = wp_flat[w, 0]
            ay = wp_flat[w, 1]
            bx = wp_flat[w + 1, 0]
            by = wp_flat[w + 1, 1]
            seg_len = math.hypot(bx - ax, by - ay)
            ex = bx - ax
            ey = by - ay
            ll = ex * ex + ey * ey
            if ll > 0.0:
                s = ((px - ax) * ex + (py - ay) * ey) / ll
                if s < 0.0:
                    s = 0.0
                elif s > 1.0:
                    s = 1.0
            else:
                s = 0.0
            qx = ax + s * ex
            qy = ay + s * ey
            d = math.hypot(px - qx, py - qy)
            if d < best_d:
                best_d = d
                best_arc = arc + s * seg_len
            arc += seg_len
        stray[p] = best_d
        # first waypoint at least `lookahead` beyond the projection
        target_x = lx
        target_y = ly
        arc = 0.0
        for w in range(lo, hi - 1):
            arc += math.hypot(wp_flat[w + 1, 0] - wp_flat[w, 0],
                              wp_flat[w + 1, 1] - wp_flat[w, 1])
            if arc >= best_arc + lookahead:
                target_x = wp_flat[w + 1, 0]
                target_y = wp_flat[w + 1, 1]
                break
        dx = target_x - px
        dy = target_y - py
        d = math.hypot(dx, dy)
        if d > 1e-12:
            out[p, 0] = dx / d * pref_speed[p]
            out[p, 1] = dy / d * pref_speed[p]
        else:
            out[p, 0] = 0.0
            out[p, 1] = 0.0
    return out, stray


@njit(cache=True)
def descend_kernel(occ, field, sx, sy, res):
    """Steepest descent over a cost-to-goal field; returns cell path.

    Neighbor order is fixed so extracted paths are deterministic. Diagonal
    steps between two mutually-adjacent occupied cells are forbidden,
    matching the planning graph.
    """
    h, w = occ.shape
    diag = res * math.sqrt(2.0)
    max_len = h * w
    cells = np.empty((max_len, 2), np.int64)
    cx = sx
    cy = sy
    cells[0, 0] = cx
    cells[0, 1] = cy
    n = 1
    ok = True
    while field[cy, cx] > 0.0:
        best_cost = INF
        best_x = -1
        best_y = -1
        for k in range(8):
            if k == 0:
                dx, dy = 1, 0
            elif k == 1:
                dx, dy = -1, 0
            elif k == 2:
                dx, dy = 0, 1
            elif k == 3:
                dx, dy = 0, -1
            elif k == 4:
                dx, dy = 1, 1
            elif k == 5:
                dx, dy = 1, -1
            elif k == 6:
                dx, dy = -1, 1
            else:
                dx, dy = -1, -1
            nx = cx + dx
            ny = cy + dy
            if nx < 0 or nx >= w or ny < 0 or ny >= h:
                continue
            if occ[ny, nx]:
                continue
            if dx != 0 and dy != 0:
                if occ[cy, cx + dx] and occ[cy + dy, cx]:
                    continue
            step = res if dx == 0 or dy == 0 else diag
            cost = field[ny, nx] + step
            if cost < best_cost:
                best_cost = cost
                best_x = nx
                best_y = ny
        if best_x < 0 or best_cost >= field[cy, cx] + 1e-9 or n >= max_len:
            ok = False
            break
        cx = best_x
        cy = best_y
        cells[n, 0] = cx
        cells[n, 1] = cy
        n += 1
    return cells[:n], ok


# ---------------------------------------------------------------------------
# neighbor selection
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def select_neighbors(dists, idxs, self_rows, ids, neighbor_dist, max_neighbors):
    """Per-row nearest-first neighbor pick with deterministic tie-breaks.

    KD-tree candidates arrive distance-sorted but with unspecified tie
    order; re-sorting by (distance, id) and emitting the retained set in
    ascending id order pins both selection and constraint order.
    """
    p_cnt = dists.shape[0]
    k = dists.shape[1]
    out = np.full((p_cnt, max_neighbors), -1, np.int64)
    out_n = np.zeros(p_cnt, np.int64)
    for p in prange(p_cnt):
        cand_d = np.empty(k, np.float64)
        cand_i = np.empty(k, np.int64)
        n = 0
        for c in range(k):
            j = idxs[p, c]
            if j == self_rows[p] or j < 0 or j >= ids.shape[0]:
                continue
            if dists[p, c] > neighbor_dist or not np.isfinite(dists[p, c]):
                continue
            cand_d[n] = dists[p, c]
            cand_i[n] = j
            n += 1
        # insertion sort by (distance, id)
        for a in range(1, n):
            dv = cand_d[a]
            iv = cand_i[a]
            b = a - 1
            while b >= 0 and (cand_d[b] > dv or (cand_d[b] == dv and ids[cand_i[b]] > ids[iv])):
                cand_d[b + 1] = cand_d[b]
                cand_i[b + 1] = cand_i[b]
                b -= 1
            cand_d[b + 1] = dv
            cand_i[b + 1] = iv
        m = min(n, max_neighbors)
        # ascending id order for constraint assembly
        for a in range(1, m):
            iv = cand_i[a]
            b = a - 1
            while b >= 0 and ids[cand_i[b]] > ids[iv]:
                cand_i[b + 1] = cand_i[b]
                b -= 1
            cand_i[b + 1] = iv
        for c in range(m):
            out[p, c] = cand_i[c]
        out_n[p] = m
    return out, out_n


_warmed = False


def warmup():
    """Compile every kernel on tiny inputs so timed runs exclude JIT cost."""
    global _warmed
    if _warmed:
        return
    segs = np.array([[0.0, -1.0, 0.0, 1.0]])
    discs = np.array([[3.0, 0.0]])
    disc_r = np.array([0.5])
    scan_kernel(1.0, 0.0, 0.0, np.array([0.0, 0.1]), 10.0, segs, discs, disc_r)
    pos = np.array([[0.0, 0.0], [1.0, 0.0]])
    vel = np.array([[1.0, 0.0], [-1.0, 0.0]])
    rad = np.array([0.25, 0.25])
    vmax = np.array([2.0, 2.0])
    ids = np.array([0, 1], np.int64)
    rows = np.array([0, 1], np.int64)
    pref = np.array([[1.0, 0.0], [-1.0, 0.0]])
    nbr = np.array([[1], [0]], np.int64)
    nbr_n = np.array([1, 1], np.int64)
    orca_step_kernel(pos, vel, rad, vmax, ids, rows, pref, nbr, nbr_n,
                     segs, 2.0, 2.0, 0.1)
    is_robot = np.zeros(2, np.uint8)
    sf_step_kernel(pos, vel, rad, vmax, ids, is_robot, rows, pref,
                   np.array([1, 0], np.int64), np.array([0, 1, 2], np.int64),
                   segs, 0.5, 2.0, 0.08, 4.0, 0.06, 1.0, 5.0, 0.1)
    pf_step_kernel(pos, rows, np.array([[5.0, 0.0], [5.0, 0.0]]),
                   np.array([1.3, 1.3]), segs, 1.0, 0.5, 2.0)
    wp = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    follow_kernel(pos, rows, wp, np.array([0, 3, 3], np.int64),
                  np.array([1.3, 1.3]), np.array([0.2, 0.2]), 1.0)
    occ = np.zeros((4, 4), np.uint8)
    field = np.fromfunction(lambda y, x: (x + y) * 1.0, (4, 4))
    descend_kernel(occ, field, 3, 3, 1.0)
    dists = np.array([[0.0, 1.0], [1.0, 0.0]])
    select_neighbors(dists, np.array([[0, 1], [0, 1]], np.int64),
                     np.array([0, 1], np.int64), ids, 10.0, 4)
    _warmed = True
