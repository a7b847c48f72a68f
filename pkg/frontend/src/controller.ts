/**
 * Reference go-to-goal controller: proportional heading control with a
 * cos-gated linear speed, driven over lockstep stepping.
 */

import { CrowdClient } from "./client.js";
import { StateMsg } from "./protocol.js";

export interface ControllerPolicy {
  goal: { x: number; y: number };
  gainLinear: number;
  gainAngular: number;
  maxLinear: number;
  maxAngular: number;
  stopTolerance: number;
}

export interface GoToGoalOptions {
  maxSteps?: number;
  onState?: (state: StateMsg) => void;
}

export interface GoToGoalResult {
  status: "reached" | "timeout";
  steps: number;
  commandedSteps: number;
  finalDistance: number;
}

export function wrapAngle(theta: number): number {
  let w = theta % (2 * Math.PI);
  if (w > Math.PI) w -= 2 * Math.PI;
  else if (w <= -Math.PI) w += 2 * Math.PI;
  return w;
}

export function clamp(v: number, lo: number, hi: number): number {
  return Math.min(Math.max(v, lo), hi);
}

/** One control decision from the latest pose. */
export function controlCommand(policy: ControllerPolicy, x: number, y: number,
                               theta: number): { linear: number; angular: number } {
  const alpha = wrapAngle(Math.atan2(policy.goal.y - y, policy.goal.x - x) - theta);
  const dist = Math.hypot(policy.goal.x - x, policy.goal.y - y);
  const linear = clamp(policy.gainLinear * dist, 0, policy.maxLinear)
    * Math.max(0, Math.cos(alpha));
  const angular = clamp(policy.gainAngular * alpha,
                        -policy.maxAngular, policy.maxAngular);
  return { linear, angular };
}

/**
 * Drive one robot to the policy goal in lockstep mode. Each iteration
 * steps once, reads the fresh pose, and latches the next command; the
 * check runs before any command, so a robot already at the goal finishes
 * with zero commanded motion steps.
 */
export async function goToGoal(client: CrowdClient, robotId: number,
                               policy: ControllerPolicy,
                               opts: GoToGoalOptions = {}): Promise<GoToGoalResult> {
  const maxSteps = opts.maxSteps ?? 2000;
  client.subscribe(robotId, "state");
  let commanded = 0;
  let distance = Infinity;
  for (let step = 0; step < maxSteps; step++) {
    const { published } = await client.step(1);
    let state: StateMsg | undefined;
    for (const msg of published) {
      if (msg.type === "state") {
        state = msg;
        opts.onState?.(msg);
      }
    }
    if (!state) continue;
    const row = state.agents.find((a) => a[0] === robotId);
    if (!row) throw new Error(`robot ${robotId} missing from state`);
    const [, , x, y, theta] = row;
    distance = Math.hypot(policy.goal.x - x, policy.goal.y - y);
    if (distance <= policy.stopTolerance) {
      if (commanded > 0) client.cmdVel(robotId, 0, 0);
      return { status: "reached", steps: step + 1,
               commandedSteps: commanded, finalDistance: distance };
    }
    const { linear, angular } = controlCommand(policy, x, y, theta);
    client.cmdVel(robotId, linear, angular);
    commanded += 1;
  }
  return { status: "timeout", steps: maxSteps,
           commandedSteps: commanded, finalDistance: distance };
}
