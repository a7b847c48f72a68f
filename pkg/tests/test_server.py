import json
import math
import random
import time

import pytest

from crowdsim import scenarios
from crowdsim.errors import ProtocolError
from crowdsim.protocol import (decode_message, encode_message, scan_message,
                               state_message)
from crowdsim.server import CrowdServer

from helpers import WireClient


@pytest.fixture
def server():
    srv = CrowdServer(scenarios.load("room20"), port=0, mode="lockstep")
    srv.start()
    yield srv
    srv.shutdown()


@pytest.fixture
def client(server):
    c = WireClient(server.host, server.port)
    yield c
    c.close()


class TestProtocol:
    def _random_payload(self, rng, mtype):
        f = lambda: rng.uniform(-100, 100)
        make = {
            "hello": lambda: {"type": "hello", "version": rng.randrange(1, 5)},
            "subscribe": lambda: {"type": "subscribe",
                                  "robot_id": rng.randrange(100),
                                  "topic": rng.choice(["scan", "state"])},
            "cmd_vel": lambda: {"type": "cmd_vel", "robot_id": rng.randrange(100),
                                "linear": f(), "angular": f()},
            "step": lambda: {"type": "step", "n": rng.randrange(1, 50)},
            "bye": lambda: {"type": "bye"},
            "welcome": lambda: {"type": "welcome", "version": 1,
                                "scenario": f"s{rng.randrange(10)}", "dt": 0.1,
                                "robots": [rng.randrange(50) for _ in range(3)]},
            "scan": lambda: {"type": "scan", "robot_id": rng.randrange(50),
                             "tick": rng.randrange(1000), "angle_min": f(),
                             "angle_increment": f(), "range_max": 25.0,
                             "ranges": [rng.choice([-1.0, rng.uniform(0.1, 25)])
                                        for _ in range(10)]},
            "state": lambda: {"type": "state", "tick": rng.randrange(1000),
                              "t": f(),
                              "agents": [[rng.randrange(50),
                                          rng.choice(["pedestrian", "robot"]),
                                          f(), f(), f(), f(), f()]
                                         for _ in range(4)]},
            "stepped": lambda: {"type": "stepped", "tick": rng.randrange(1000)},
            "error": lambda: {"type": "error", "code": "unknown_robot",
                              "message": "x" * rng.randrange(1, 30)},
        }
        return make[mtype]()

    def test_round_trip_identity_1000_random_payloads(self):
        rng = random.Random(42)
        types = ["hello", "subscribe", "cmd_vel", "step", "bye", "welcome",
                 "scan", "state", "stepped", "error"]
        for _ in range(1000):
            msg = self._random_payload(rng, rng.choice(types))
            normalized = decode_message(encode_message(msg))
            assert normalized == decode_message(encode_message(normalized))
            again = decode_message(encode_message(normalized))
            assert again == normalized

    def test_one_object_per_lf_terminated_line(self):
        data = encode_message({"type": "stepped", "tick": 3})
        assert data.endswith(b"\n") and data.count(b"\n") == 1
        assert b" " not in data.split(b'"message"')[0]  # compact encoding

    def test_unknown_type_rejected(self):
        with pytest.raises(ProtocolError):
            decode_message('{"type": "warp", "x": 1}')

    def test_missing_field_rejected(self):
        with pytest.raises(ProtocolError):
            decode_message('{"type": "cmd_vel", "robot_id": 1, "linear": 0.1}')

    def test_nohit_serialized_as_minus_one(self):
        from crowdsim.engine import Engine
        from crowdsim.scenario import parse_scenario
        doc = {"bounds": [-50, -50, 50, 50],
               "agents": [{"id": 0, "kind": "robot", "x": 0, "y": 0,
                           "heading": 0.0}]}
        eng = Engine(parse_scenario(json.dumps(doc)))
        msg = scan_message(eng.simulate_scan(0))
        assert all(r == -1.0 for r in msg["ranges"])
        decode_message(encode_message(msg))


class TestLockstep:
    def test_hello_welcome(self, client):
        client.send({"type": "hello", "version": 1})
        msg = client.recv()
        assert msg["type"] == "welcome"
        assert msg["robots"] == [100]
        assert msg["dt"] == 0.1
        assert msg["scenario"] == "room20"

    def test_version_mismatch(self, client):
        client.send({"type": "hello", "version": 3})
        msg = client.recv()
        assert msg["type"] == "error" and msg["code"] == "unsupported_version"

    def test_scan_subscription_step_contract(self, client):
        client.send({"type": "subscribe", "robot_id": 100, "topic": "scan"})
        client.send({"type": "step", "n": 1})
        stepped, before = client.recv_until("stepped")
        assert stepped["tick"] == 1
        assert [m["type"] for m in before] == ["scan"]
        assert before[0]["robot_id"] == 100 and before[0]["tick"] == 1
        assert len(before[0]["ranges"]) == 440

    def test_tick_count_equals_acknowledged_steps(self, server, client):
        client.send({"type": "step", "n": 1})
        client.recv_until("stepped")
        client.send({"type": "step", "n": 1})
        client.recv_until("stepped")
        client.send({"type": "step", "n": 1})
        msg, _ = client.recv_until("stepped")
        assert msg["tick"] == 3
        assert server.engine.tick == 3

    def test_multi_step_publishes_per_tick(self, client):
        client.send({"type": "subscribe", "robot_id": 100, "topic": "state"})
        client.send({"type": "step", "n": 5})
        stepped, before = client.recv_until("stepped")
        states = [m for m in before if m["type"] == "state"]
        assert [s["tick"] for s in states] == [1, 2, 3, 4, 5]
        assert stepped["tick"] == 5

    def test_state_equals_engine_snapshot(self, server, client):
        client.send({"type": "subscribe", "robot_id": 100, "topic": "state"})
        client.send({"type": "step", "n": 2})
        stepped, before = client.recv_until("stepped")
        last_state = [m for m in before if m["type"] == "state"][-1]
        expected = decode_message(encode_message(
            state_message(server.engine.snapshot())))
        assert last_state == expected

    def test_cmd_vel_unknown_robot(self, client):
        client.send({"type": "cmd_vel", "robot_id": 55, "linear": 1.0,
                     "angular": 0.0})
        msg = client.recv()
        assert msg["type"] == "error" and msg["code"] == "unknown_robot"

    def test_malformed_line_keeps_session_alive(self, client):
        client.send_raw(b'{"type": "cmd_vel"\n')
        msg = client.recv()
        assert msg["type"] == "error" and msg["code"] == "bad_message"
        client.send({"type": "hello", "version": 1})
        assert client.recv()["type"] == "welcome"

    def test_command_latching_last_wins(self, server, client):
        client.send({"type": "cmd_vel", "robot_id": 100, "linear": 5.0,
                     "angular": 0.0})
        client.send({"type": "cmd_vel", "robot_id": 100, "linear": 1.0,
                     "angular": 0.0})
        client.send({"type": "step", "n": 1})
        client.recv_until("stepped")
        row = server.engine.robot_row(100)
        assert server.engine.cmd_linear[row] == 1.0

    def test_zero_order_hold_across_steps(self, server, client):
        client.send({"type": "cmd_vel", "robot_id": 100, "linear": 1.0,
                     "angular": 0.0})
        client.send({"type": "step", "n": 1})
        client.recv_until("stepped")
        x1 = server.engine.snapshot().agents[-1].x
        client.send({"type": "step", "n": 1})
        client.recv_until("stepped")
        x2 = server.engine.snapshot().agents[-1].x
        assert x2 - x1 == pytest.approx(0.1, abs=1e-9)

    def test_two_clients_command_different_robots(self):
        # a second robot needs its own scenario
        import crowdsim.scenario as sc
        spec = scenarios.load("room20")
        extra = sc.AgentSpec(id=101, kind="robot",
                             start=sc.Vec2(5.0, 5.0), heading=math.pi / 2,
                             radius=0.3, pref_speed=1.0, max_speed=1.5)
        spec = sc.with_extra_agents(spec, (extra,))
        srv = CrowdServer(spec, port=0, mode="lockstep")
        srv.start()
        try:
            c1 = WireClient(srv.host, srv.port)
            c2 = WireClient(srv.host, srv.port)
            c1.send({"type": "cmd_vel", "robot_id": 100, "linear": 1.0,
                     "angular": 0.0})
            c2.send({"type": "cmd_vel", "robot_id": 101, "linear": 0.5,
                     "angular": 0.0})
            time.sleep(0.2)  # let both latches land before stepping
            c1.send({"type": "step", "n": 1})
            c1.recv_until("stepped")
            snap = srv.engine.snapshot()
            r100 = next(a for a in snap.agents if a.id == 100)
            r101 = next(a for a in snap.agents if a.id == 101)
            assert r100.x == pytest.approx(-5.0 + 0.1, abs=1e-12)
            assert r101.y == pytest.approx(5.0 + 0.05, abs=1e-12)
            c1.close()
            c2.close()
        finally:
            srv.shutdown()

    def test_step_default_n_is_one(self, server, client):
        client.send_raw(b'{"type":"step"}\n')
        msg, _ = client.recv_until("stepped")
        assert msg["tick"] == 1

    def test_bad_step_n(self, client):
        client.send({"type": "step", "n": 0})
        msg = client.recv()
        assert msg["type"] == "error" and msg["code"] == "bad_request"


class TestRealtime:
    def test_steps_advance_on_wall_clock(self):
        srv = CrowdServer(scenarios.load("cross2"), port=0, mode="realtime",
                          rate_hz=50.0)
        srv.start()
        try:
            c = WireClient(srv.host, srv.port)
            c.send({"type": "step", "n": 1})
            msg = c.recv()
            assert msg["type"] == "error" and msg["code"] == "not_lockstep"
            deadline = time.time() + 5.0
            while srv.engine.tick < 5 and time.time() < deadline:
                time.sleep(0.02)
            assert srv.engine.tick >= 5
            c.close()
        finally:
            srv.shutdown()

    def test_max_steps_stops_server(self, tmp_path):
        record = tmp_path / "log.jsonl"
        srv = CrowdServer(scenarios.load("cross2"), port=0, mode="realtime",
                          rate_hz=200.0, record_path=str(record), max_steps=10)
        srv.start()
        srv.wait()
        srv.shutdown()
        lines = record.read_text().splitlines()
        assert len(lines) == 11  # initial state + 10 ticks
        assert json.loads(lines[-1])["tick"] == 10


class TestGoldenFixtures:
    def test_golden_lines_decode_and_reencode(self):
        import pathlib
        path = pathlib.Path(__file__).parent / "fixtures" / "wire_golden.jsonl"
        lines = path.read_bytes().splitlines(keepends=True)
        assert len(lines) == 12
        for line in lines:
            msg = decode_message(line)
            assert encode_message(msg) == line
