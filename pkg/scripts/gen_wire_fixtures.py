#!/usr/bin/env python3
"""Regenerate the golden wire-protocol fixtures shared with frontend tests.

Client-to-server lines use non-integer-valued floats so byte equality is
well-defined across JSON emitters; the semantic section exercises
integer-valued floats on purpose.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from crowdsim.protocol import encode_message  # noqa: E402

MESSAGES = [
    {"type": "hello", "version": 1},
    {"type": "subscribe", "robot_id": 100, "topic": "scan"},
    {"type": "subscribe", "robot_id": 100, "topic": "state"},
    {"type": "cmd_vel", "robot_id": 100, "linear": 0.75, "angular": -0.125},
    {"type": "step", "n": 4},
    {"type": "bye"},
    {"type": "welcome", "version": 1, "scenario": "room20", "dt": 0.1,
     "robots": [100]},
    {"type": "scan", "robot_id": 100, "tick": 7, "angle_min": -1.9198621771937625,
     "angle_increment": 0.008746524725256056, "range_max": 25.0,
     "ranges": [4.75, -1.0, 0.125, 24.5]},
    {"type": "state", "tick": 7, "t": 0.7000000000000001,
     "agents": [[0, "pedestrian", 1.5, -2.25, 0.5, 1.25, -0.375],
                [100, "robot", -5.5, 0.125, 3.0625, 0.75, 0.25]]},
    {"type": "stepped", "tick": 7},
    {"type": "error", "code": "unknown_robot", "message": "no robot with id 7"},
    # integer-valued floats: semantically equal, rendering may differ
    {"type": "cmd_vel", "robot_id": 100, "linear": 1.0, "angular": 0.0},
]

OUT = pathlib.Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    path = OUT / "wire_golden.jsonl"
    with open(path, "wb") as fh:
        for msg in MESSAGES:
            fh.write(encode_message(msg))
    print(f"wrote {path} ({len(MESSAGES)} lines)")


if __name__ == "__main__":
    main()
