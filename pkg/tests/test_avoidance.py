import math
import random

import numpy as np
import pytest

from crowdsim.avoidance import (OrcaLine, OrcaParams, SocialForceParams,
                                lines_as_array, orca_lines, orca_solve,
                                social_force_velocity)
from crowdsim.engine import AgentState
from crowdsim.geometry import ObstacleSet, Segment, Vec2, segment_segment_distance

from helpers import disc_collision_time, random_lines, sample_disc_optimum


def agent(aid, x, y, vx=0.0, vy=0.0, r=0.3, kind="pedestrian",
          pref=1.3, vmax=2.0):
    return AgentState(id=aid, kind=kind, position=Vec2(x, y), heading=0.0,
                      velocity=Vec2(vx, vy), radius=r, pref_speed=pref,
                      max_speed=vmax)


ORCA = OrcaParams(time_horizon=2.0, time_horizon_obst=2.0,
                  neighbor_dist=10.0, max_neighbors=10)
SF = SocialForceParams()


class TestSocialForce:
    def test_driving_force_only(self):
        me = agent(0, 0, 0)
        v = social_force_velocity(me, Vec2(1, 0), [], ObstacleSet(),
                                  SocialForceParams(tau=0.5), dt=0.1)
        assert (v.x, v.y) == pytest.approx((0.2, 0.0), abs=0)

    def test_symmetric_neighbors_cancel_laterally(self):
        me = agent(0, 0, 0, vx=1.0)
        left = agent(1, 1.0, 0.8)
        right = agent(2, 1.0, -0.8)
        v = social_force_velocity(me, Vec2(1, 0), [left, right], ObstacleSet(),
                                  SF, dt=0.1)
        assert abs(v.y) <= 1e-12

    def test_hand_evaluated_single_neighbor(self):
        # neighbor dead ahead: v' = v + dt * A * exp((r_sum - d)/B) * (-1, 0)
        params = SocialForceParams(tau=0.5, A=2.0, B=0.08)
        me = agent(0, 0, 0, vx=1.0, r=0.3)
        other = agent(1, 1.0, 0.0, r=0.3)
        expected_x = 1.0 + 0.1 * (0.0 + 2.0 * math.exp((0.6 - 1.0) / 0.08) * -1.0)
        v = social_force_velocity(me, Vec2(1, 0), [other], ObstacleSet(),
                                  params, dt=0.1)
        assert v.x == expected_x
        assert v.y == 0.0

    def test_neighbor_beyond_cutoff_ignored(self):
        me = agent(0, 0, 0, vx=1.0)
        far = agent(1, SF.neighbor_dist + 0.1, 0.0)
        v_with = social_force_velocity(me, Vec2(1, 0), [far], ObstacleSet(), SF, 0.1)
        v_without = social_force_velocity(me, Vec2(1, 0), [], ObstacleSet(), SF, 0.1)
        assert (v_with.x, v_with.y) == (v_without.x, v_without.y)

    def test_wall_repels(self):
        wall = ObstacleSet.from_segments([Segment(Vec2(-5, 0.4), Vec2(5, 0.4))])
        me = agent(0, 0, 0)
        v = social_force_velocity(me, Vec2(0, 0), [], wall, SF, 0.1)
        assert v.y < 0.0

    def test_translation_invariance_bitwise(self):
        # dyadic offsets keep coordinate sums exact, so outputs must be
        # bit-identical
        params = SF
        shift = 512.5
        me0 = agent(0, 0.25, -1.5, vx=0.75, vy=0.125)
        n0 = [agent(1, 1.25, -1.0, vx=-0.5), agent(2, -0.75, -2.25, vy=0.5)]
        me1 = agent(0, 0.25 + shift, -1.5 + shift, vx=0.75, vy=0.125)
        n1 = [agent(1, 1.25 + shift, -1.0 + shift, vx=-0.5),
              agent(2, -0.75 + shift, -2.25 + shift, vy=0.5)]
        v0 = social_force_velocity(me0, Vec2(1, 0.5), n0, ObstacleSet(), params, 0.1)
        v1 = social_force_velocity(me1, Vec2(1, 0.5), n1, ObstacleSet(), params, 0.1)
        assert (v0.x, v0.y) == (v1.x, v1.y)

    def test_speed_cap(self):
        rng = random.Random(8)
        for _ in range(200):
            me = agent(0, 0, 0, vx=rng.uniform(-2, 2), vy=rng.uniform(-2, 2),
                       vmax=1.6)
            neighbors = [agent(i + 1, rng.uniform(-1, 1), rng.uniform(-1, 1))
                         for i in range(3)]
            v = social_force_velocity(me, Vec2(1.3, 0), neighbors,
                                      ObstacleSet(), SF, 0.1)
            assert v.norm() <= 1.6 + 1e-12

    def test_coincident_agents_deterministic(self):
        me = agent(0, 1.0, 1.0)
        twin = agent(7, 1.0, 1.0)
        v1 = social_force_velocity(me, Vec2(0, 0), [twin], ObstacleSet(), SF, 0.1)
        v2 = social_force_velocity(me, Vec2(0, 0), [twin], ObstacleSet(), SF, 0.1)
        assert (v1.x, v1.y) == (v2.x, v2.y)
        assert v1.norm() > 0.0


def head_on_oracle_line():
    """Independent construction for the canonical head-on pair.

    p_i=(0,0), p_j=(2,0), r=0.5 each, v_i=(1,0), v_j=(-1,0), tau=2.
    The truncated cone has cutoff disc center (1,0) radius 0.5; the
    relative velocity (2,0) sits past the cutoff center on the axis, so the
    nearest escape is onto a leg. Ties choose the left leg.
    """
    center = np.array([1.0, 0.0])
    rad = 0.5
    # left tangent of the cutoff disc as seen from the origin
    c2 = center @ center
    l2 = c2 - rad * rad
    leg_dir = np.array([
        (l2 * center[0] - rad * math.sqrt(l2) * center[1]) / c2,
        (l2 * center[1] + rad * math.sqrt(l2) * center[0]) / c2,
    ])
    leg_dir = leg_dir / np.linalg.norm(leg_dir)
    v_rel = np.array([2.0, 0.0])
    proj = (v_rel @ leg_dir) * leg_dir
    u = proj - v_rel
    point = np.array([1.0, 0.0]) + 0.5 * u
    return point, leg_dir


class TestOrcaLines:
    def test_far_neighbor_excluded(self):
        me = agent(0, 0, 0, vx=1.0)
        far = agent(1, ORCA.neighbor_dist + 0.5, 0.0)
        assert orca_lines(me, [far], ObstacleSet(), ORCA, 0.1) == []

    def test_max_neighbors_retention(self):
        me = agent(0, 0, 0)
        neighbors = [agent(i + 1, 1.0 + 0.3 * i, 0.0) for i in range(15)]
        params = OrcaParams(max_neighbors=4)
        lines = orca_lines(me, neighbors, ObstacleSet(), params, 0.1)
        assert len(lines) == 4

    def test_head_on_matches_geometric_oracle(self):
        me = agent(0, 0, 0, vx=1.0, r=0.5)
        other = agent(1, 2.0, 0.0, vx=-1.0, r=0.5)
        lines = orca_lines(me, [other], ObstacleSet(), ORCA, 0.1)
        assert len(lines) == 1
        point, direction = head_on_oracle_line()
        assert lines[0].point.x == pytest.approx(point[0], abs=1e-9)
        assert lines[0].point.y == pytest.approx(point[1], abs=1e-9)
        assert lines[0].direction.x == pytest.approx(direction[0], abs=1e-9)
        assert lines[0].direction.y == pytest.approx(direction[1], abs=1e-9)

    def test_non_colliding_pairs_keep_current_velocity_feasible(self):
        # oracle: earliest disc-contact time; pairs that cannot collide
        # within the horizon must not constrain away the current velocity
        rng = random.Random(17)
        checked = 0
        while checked < 1000:
            me = agent(0, rng.uniform(-5, 5), rng.uniform(-5, 5),
                       vx=rng.uniform(-1.5, 1.5), vy=rng.uniform(-1.5, 1.5),
                       r=rng.uniform(0.2, 0.5))
            other = agent(1, rng.uniform(-5, 5), rng.uniform(-5, 5),
                          vx=rng.uniform(-1.5, 1.5), vy=rng.uniform(-1.5, 1.5),
                          r=rng.uniform(0.2, 0.5))
            rel_pos = (other.position.x - me.position.x,
                       other.position.y - me.position.y)
            rel_vel = (me.velocity.x - other.velocity.x,
                       me.velocity.y - other.velocity.y)
            ttc = disc_collision_time(rel_pos, rel_vel, me.radius + other.radius)
            if ttc <= ORCA.time_horizon * 1.001:
                continue
            lines = orca_lines(me, [other], ObstacleSet(), ORCA, 0.1)
            if not lines:
                continue
            assert abs(lines[0].direction.norm() - 1.0) <= 1e-9
            assert lines[0].satisfied_by(me.velocity, tol=1e-9)
            checked += 1

    def test_reciprocal_pair_exits_velocity_obstacle(self):
        # if both agents adopt their constrained velocities, separation may
        # graze but never dip below the radius sum within a full horizon
        rng = random.Random(99)
        checked = 0
        while checked < 400:
            a = agent(0, rng.uniform(-4, 4), rng.uniform(-4, 4),
                      vx=rng.uniform(-1.5, 1.5), vy=rng.uniform(-1.5, 1.5),
                      r=0.3)
            b = agent(1, rng.uniform(-4, 4), rng.uniform(-4, 4),
                      vx=rng.uniform(-1.5, 1.5), vy=rng.uniform(-1.5, 1.5),
                      r=0.3)
            d = a.position.distance_to(b.position)
            if d <= a.radius + b.radius + 0.05:
                continue
            la = orca_lines(a, [b], ObstacleSet(), ORCA, 0.1)
            lb = orca_lines(b, [a], ObstacleSet(), ORCA, 0.1)
            va = orca_solve(la, a.velocity, a.max_speed)
            vb = orca_solve(lb, b.velocity, b.max_speed)
            if not (la[0].satisfied_by(va, tol=1e-9)
                    and lb[0].satisfied_by(vb, tol=1e-9)):
                continue  # escape needs more than max_speed; no guarantee
            px = b.position.x - a.position.x
            py = b.position.y - a.position.y
            vx = va.x - vb.x
            vy = va.y - vb.y
            v_sq = vx * vx + vy * vy
            t_star = (px * vx + py * vy) / v_sq if v_sq > 0 else 0.0
            t_star = min(max(t_star, 0.0), ORCA.time_horizon)
            min_sep = math.hypot(px - t_star * vx, py - t_star * vy)
            assert min_sep >= a.radius + b.radius - 1e-6
            checked += 1

    def test_mirror_symmetry(self):
        a = agent(0, -2.0, 0.75, vx=1.25, vy=-0.375, r=0.25)
        b = agent(1, 2.0, -0.75, vx=-1.25, vy=0.375, r=0.25)
        # b is the x-axis mirror image of a; outputs must mirror
        la = orca_lines(a, [b], ObstacleSet(), ORCA, 0.1)
        lb = orca_lines(b, [a], ObstacleSet(), ORCA, 0.1)
        va = orca_solve(la, Vec2(1.3, 0.0), 2.0)
        vb = orca_solve(lb, Vec2(-1.3, 0.0), 2.0)
        assert vb.x == pytest.approx(-va.x, abs=1e-9)
        assert vb.y == pytest.approx(va.y, abs=1e-9)


class TestObstacleLines:
    wall = ObstacleSet.from_segments([Segment(Vec2(1.0, -5.0), Vec2(1.0, 5.0))])

    def test_current_safe_velocity_feasible(self):
        me = agent(0, 0, 0, vx=0.0, vy=0.0)
        lines = orca_lines(me, [], self.wall, ORCA, 0.1)
        assert len(lines) == 1
        assert lines[0].satisfied_by(Vec2(0, 0), tol=1e-9)
        assert lines[0].satisfied_by(Vec2(-1.0, 0.0), tol=1e-9)

    def test_wall_bound_velocity_infeasible(self):
        me = agent(0, 0, 0, vx=1.0, vy=0.0)
        lines = orca_lines(me, [], self.wall, ORCA, 0.1)
        # heading straight at a wall 0.7m of clearance away within a 2s
        # horizon must be cut off
        assert not lines[0].satisfied_by(Vec2(1.0, 0.0))

    def test_feasible_velocities_avoid_wall(self):
        # soundness oracle: any velocity on the feasible side must keep
        # clearance >= radius for the whole obstacle horizon
        rng = random.Random(31)
        checked = 0
        while checked < 1500:
            seg = Segment(Vec2(rng.uniform(-4, 4), rng.uniform(-4, 4)),
                          Vec2(rng.uniform(-4, 4), rng.uniform(-4, 4))) \
                if rng.random() < 0.9 else Segment(Vec2(-1, 1.0), Vec2(1, 1.0))
            obs = ObstacleSet.from_segments([seg])
            r = rng.uniform(0.15, 0.45)
            p = Vec2(rng.uniform(-5, 5), rng.uniform(-5, 5))
            if seg.distance_to(p) <= r + 0.02:
                continue
            me = agent(0, p.x, p.y, vx=rng.uniform(-1.5, 1.5),
                       vy=rng.uniform(-1.5, 1.5), r=r)
            lines = orca_lines(me, [], obs, ORCA, 0.1)
            if not lines:
                continue
            w = Vec2(rng.uniform(-2, 2), rng.uniform(-2, 2))
            if not lines[0].satisfied_by(w, tol=-1e-6):
                continue
            end = p + w * ORCA.time_horizon_obst
            swept = segment_segment_distance(p, end, seg.a, seg.b) if p != end \
                else seg.distance_to(p)
            assert swept >= r - 1e-6
            checked += 1

    def test_overlap_pushes_out(self):
        me = agent(0, 0.85, 0.0, vx=0.0, vy=0.0, r=0.3)  # 0.15m into the margin
        lines = orca_lines(me, [], self.wall, ORCA, 0.1)
        v = orca_solve(lines, Vec2(0, 0), 2.0, fixed_count=len(lines))
        assert v.x < 0.0  # escape away from the wall


class TestOrcaSolve:
    def test_no_lines_returns_pref(self):
        v = orca_solve([], Vec2(1.0, 0.5), 2.0)
        assert (v.x, v.y) == (1.0, 0.5)

    def test_no_lines_clamps_to_max_speed(self):
        v = orca_solve([], Vec2(3.0, 4.0), 2.0)
        assert v.norm() == pytest.approx(2.0, abs=1e-12)
        assert v.x / v.y == pytest.approx(3.0 / 4.0, abs=1e-12)

    def test_single_line_projects(self):
        # feasible half-plane x <= 0; nearest feasible point to (1, 0.5)
        # is its projection (0, 0.5)
        line = OrcaLine(Vec2(0, 0), Vec2(0, 1))
        v = orca_solve([line], Vec2(1.0, 0.5), 2.0)
        assert (v.x, v.y) == pytest.approx((0.0, 0.5), abs=1e-12)

    def test_feasibility_certificate_random(self):
        rng = random.Random(12)
        max_speed = 2.0
        feasible_seen = 0
        for case in range(400):
            arr = random_lines(rng)
            lines = [OrcaLine(Vec2(a, b), Vec2(c, d)) for a, b, c, d in arr]
            pref = Vec2(rng.uniform(-2, 2), rng.uniform(-2, 2))
            v = orca_solve(lines, pref, max_speed)
            assert v.norm() <= max_speed + 1e-12
            _, _, feasible = sample_disc_optimum(arr, (pref.x, pref.y),
                                                 max_speed, 20_000, seed=case)
            if feasible:
                for ln in lines:
                    assert ln.satisfied_by(v, tol=1e-9)
                feasible_seen += 1
        assert feasible_seen > 100

    def test_matches_sampling_oracle_objective(self):
        rng = random.Random(77)
        max_speed = 2.0
        for case in range(120):
            arr = random_lines(rng)
            lines = [OrcaLine(Vec2(a, b), Vec2(c, d)) for a, b, c, d in arr]
            pref = Vec2(rng.uniform(-2, 2), rng.uniform(-2, 2))
            v = orca_solve(lines, pref, max_speed)
            _, best_obj, feasible = sample_disc_optimum(
                arr, (pref.x, pref.y), max_speed, 200_000, seed=1000 + case)
            if feasible:
                got = v.distance_to(pref)
                assert got <= best_obj + 1e-9
                assert best_obj <= got + 2e-2
            else:
                got = max(ln.violation(v) for ln in lines)
                assert got <= best_obj + 2e-2
