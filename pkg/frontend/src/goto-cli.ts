#!/usr/bin/env node
/** Drive a robot to a goal over a live lockstep server. */

import { CrowdClient } from "./client.js";
import { goToGoal } from "./controller.js";
import { DEFAULT_PORT } from "./protocol.js";

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key?.startsWith("--") || value === undefined) {
      throw new Error(`bad argument pair near '${key}'`);
    }
    out[key.slice(2)] = value;
  }
  return out;
}

async function main(): Promise<number> {
  let args: Record<string, string>;
  try {
    args = parseArgs(process.argv.slice(2));
    for (const required of ["robot", "x", "y"]) {
      if (!(required in args)) throw new Error(`missing --${required}`);
    }
  } catch (err) {
    console.error(`usage: goto --robot R --x X --y Y [--host H] [--port P] ` +
        `[--tol T] [--max-steps N]\n${(err as Error).message}`);
    return 2;
  }
  const client = await CrowdClient.connect({
    host: args.host ?? "127.0.0.1",
    port: args.port ? Number(args.port) : DEFAULT_PORT,
  });
  try {
    const welcome = await client.hello();
    console.log(`connected: scenario '${welcome.scenario}', dt ${welcome.dt}s, ` +
        `robots [${welcome.robots.join(", ")}]`);
    const result = await goToGoal(client, Number(args.robot), {
      goal: { x: Number(args.x), y: Number(args.y) },
      gainLinear: 0.8,
      gainAngular: 2.0,
      maxLinear: 1.0,
      maxAngular: 1.5,
      stopTolerance: args.tol ? Number(args.tol) : 0.2,
    }, { maxSteps: args["max-steps"] ? Number(args["max-steps"]) : 2000 });
    console.log(`${result.status} after ${result.steps} steps ` +
        `(final distance ${result.finalDistance.toFixed(3)} m)`);
    return result.status === "reached" ? 0 : 1;
  } finally {
    client.close();
  }
}

main().then((code) => process.exit(code), (err) => {
  console.error(err);
  process.exit(1);
});
