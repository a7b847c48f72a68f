"""The full control loop over the wire protocol.

Starts the TCP service in lockstep mode inside this process, connects a
plain socket client, and runs a proportional go-to-goal controller: read
the latest pose, command angular velocity toward the goal and a
cos-gated linear speed, step, repeat. (The bundled TypeScript SDK under
frontend/ packages this client side properly; this script shows the raw
wire traffic.) Output: demos/output/06_control.png
"""

import json
import math
import pathlib
import socket

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from crowdsim import scenarios
from crowdsim.server import CrowdServer

GOAL = (5.0, 4.0)
ROBOT = 100

server = CrowdServer(scenarios.load("room20"), port=0, mode="lockstep")
server.start()
sock = socket.create_connection((server.host, server.port))
reader = sock.makefile("rb")


def send(msg):
    sock.sendall((json.dumps(msg) + "\n").encode())


def recv():
    return json.loads(reader.readline())


send({"type": "hello", "version": 1})
print("welcome:", recv())
send({"type": "subscribe", "robot_id": ROBOT, "topic": "state"})

track = []
status = "timeout"
for step in range(1500):
    send({"type": "step", "n": 1})
    state = None
    while True:
        msg = recv()
        if msg["type"] == "state":
            state = msg
        elif msg["type"] == "stepped":
            break
    rid, _, x, y, theta, _, _ = next(a for a in state["agents"] if a[0] == ROBOT)
    track.append((x, y))
    dist = math.hypot(GOAL[0] - x, GOAL[1] - y)
    if dist <= 0.2:
        send({"type": "cmd_vel", "robot_id": ROBOT, "linear": 0.0, "angular": 0.0})
        status = f"reached in {step + 1} steps"
        break
    alpha = math.atan2(GOAL[1] - y, GOAL[0] - x) - theta
    alpha = math.atan2(math.sin(alpha), math.cos(alpha))
    send({"type": "cmd_vel", "robot_id": ROBOT,
          "linear": max(0.0, min(1.0, 0.8 * dist)) * max(0.0, math.cos(alpha)),
          "angular": max(-1.5, min(1.5, 2.0 * alpha))})
send({"type": "bye"})
sock.close()
server.shutdown()

fig, ax = plt.subplots(figsize=(6, 6))
xs, ys = zip(*track)
ax.plot(xs, ys, "tab:blue", lw=2, label="robot")
ax.plot(*GOAL, "r*", ms=16, label="goal")
spec = scenarios.load("room20")
for s in spec.obstacles.segments:
    ax.plot([s.a.x, s.b.x], [s.a.y, s.b.y], "k-", lw=2)
ax.legend()
ax.set_aspect("equal")
ax.set_title(f"go-to-goal over TCP: {status}")

out = pathlib.Path(__file__).parent / "output"
out.mkdir(exist_ok=True)
fig.savefig(out / "06_control.png", dpi=110, bbox_inches="tight")
print(status, f"— final distance {math.hypot(GOAL[0]-xs[-1], GOAL[1]-ys[-1]):.3f} m")
print(f"wrote {out / '06_control.png'}")
