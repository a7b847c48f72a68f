/**
 * End-to-end: spawn the Python simulator, drive its bundled room scenario
 * over the live TCP protocol, and check the controller reaches its goal
 * while the crowd keeps its distance.
 *
 * Requires the Python package to be installed (pip install -e ..).
 */

import { ChildProcess, spawn } from "node:child_process";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { CrowdClient } from "../src/client.js";
import { goToGoal } from "../src/controller.js";
import { StateMsg } from "../src/protocol.js";

const REPO_ROOT = join(dirname(fileURLToPath(import.meta.url)), "..", "..");

// room20: one robot (id 100, radius 0.3) at (-5, 0) among ten wandering
// pedestrians (radius 0.25) in a 20x20 walled room
const ROBOT_ID = 100;
const GOAL = { x: 5, y: 0 };
const RADIUS_SUM = 0.3 + 0.25;

let server: ChildProcess;
let port: number;

beforeAll(async () => {
  server = spawn("python3", ["-m", "crowdsim.cli", "run", "room20",
                             "--mode", "lockstep", "--port", "0"],
                 { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] });
  port = await new Promise<number>((resolve, reject) => {
    let out = "";
    const timer = setTimeout(
      () => reject(new Error(`server did not announce a port:\n${out}`)),
      120_000);
    server.stdout!.on("data", (chunk: Buffer) => {
      out += chunk.toString();
      const m = out.match(/listening on [\d.]+:(\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve(Number(m[1]));
      }
    });
    server.on("exit", (code) => reject(new Error(`server exited (${code})`)));
  });
}, 150_000);

afterAll(() => {
  server?.kill();
});

describe("go-to-goal over the live server", () => {
  it("crosses the room to within tolerance without touching the crowd", async () => {
    const client = await CrowdClient.connect({ port, timeoutMs: 60_000 });
    try {
      const welcome = await client.hello();
      expect(welcome.scenario).toBe("room20");
      expect(welcome.robots).toEqual([ROBOT_ID]);

      // scan subscription is demonstrated, not consumed by the policy
      client.subscribe(ROBOT_ID, "scan");

      let minSeparation = Infinity;
      let scanCount = 0;
      const onState = (state: StateMsg) => {
        const robot = state.agents.find((a) => a[0] === ROBOT_ID)!;
        for (const a of state.agents) {
          if (a[1] !== "pedestrian") continue;
          const d = Math.hypot(a[2] - robot[2], a[3] - robot[3]);
          minSeparation = Math.min(minSeparation, d);
        }
      };

      const origStep = client.step.bind(client);
      client.step = async (n?: number) => {
        const res = await origStep(n);
        scanCount += res.published.filter((m) => m.type === "scan").length;
        return res;
      };

      const result = await goToGoal(client, ROBOT_ID, {
        goal: GOAL,
        gainLinear: 0.8,
        gainAngular: 2.0,
        maxLinear: 1.0,
        maxAngular: 1.5,
        stopTolerance: 0.2,
      }, { maxSteps: 2000, onState });

      expect(result.status).toBe("reached");
      expect(result.steps).toBeLessThanOrEqual(2000);
      expect(result.finalDistance).toBeLessThanOrEqual(0.2);
      expect(scanCount).toBeGreaterThan(0);
      // the crowd crossed the robot's path...
      expect(minSeparation).toBeLessThan(1.5);
      // ...and still never overlapped it
      expect(minSeparation).toBeGreaterThanOrEqual(RADIUS_SUM - 1e-3);
    } finally {
      client.close();
    }
  }, 240_000);

  it("finishes immediately with zero commanded motion when already at the goal", async () => {
    const client = await CrowdClient.connect({ port, timeoutMs: 60_000 });
    try {
      await client.hello();
      // ask for the robot's own current position as the goal
      const { published } = await (async () => {
        client.subscribe(ROBOT_ID, "state");
        return client.step(1);
      })();
      const state = published.find((m) => m.type === "state") as StateMsg;
      const robot = state.agents.find((a) => a[0] === ROBOT_ID)!;
      const result = await goToGoal(client, ROBOT_ID, {
        goal: { x: robot[2], y: robot[3] },
        gainLinear: 0.8,
        gainAngular: 2.0,
        maxLinear: 1.0,
        maxAngular: 1.5,
        stopTolerance: 0.2,
      }, { maxSteps: 50 });
      expect(result.status).toBe("reached");
      expect(result.commandedSteps).toBe(0);
    } finally {
      client.close();
    }
  }, 120_000);

  it("reports unknown robots as protocol errors", async () => {
    const client = await CrowdClient.connect({ port, timeoutMs: 60_000 });
    try {
      await client.hello();
      client.cmdVel(77, 0.5, 0.0);
      const msg = await client.next();
      expect(msg.type).toBe("error");
      if (msg.type === "error") expect(msg.code).toBe("unknown_robot");
    } finally {
      client.close();
    }
  }, 120_000);
});
