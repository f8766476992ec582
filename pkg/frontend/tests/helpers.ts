/** Node-side plumbing for the live-engine tests: spawn the session
 * service as a child process and adapt the `ws` package to BoothSocket
 * (browsers get the native-WebSocket adapter in src/client.ts instead).
 */

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import WebSocket from "ws";

import type { BoothSocket, SocketFactory } from "../src/client.js";

export function nodeSocket(url: string): SocketFactory {
  return () =>
    new Promise<BoothSocket>((resolve, reject) => {
      const sock = new WebSocket(url);
      sock.on("open", () =>
        resolve({
          send: (data) => sock.send(data),
          close: () => sock.close(),
          onMessage: (handler) => sock.on("message", (d) => handler(d.toString())),
          onClose: (handler) => sock.on("close", () => handler()),
        }),
      );
      sock.on("error", (e) => reject(e));
    });
}

export const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

export async function pollUntil(check: () => boolean, timeoutMs = 5000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (check()) return;
    await sleep(50);
  }
  throw new Error("condition not met in time");
}

export interface EngineHandle {
  url: string;
  storageDir: string;
  stop(): Promise<void>;
}

/** One short module so a whole lesson fits in a test run. */
const E2E_PLAN = {
  modules: [
    {
      module: "combination",
      lines: 3,
      assisted: true,
      tracked: ["ctwd", "travel_angle", "work_angle", "speed"],
    },
  ],
  pass_threshold: 0.5,
  retry_factor: 1.0,
};

export async function startEngine(): Promise<EngineHandle> {
  const storageDir = mkdtempSync(join(tmpdir(), "booth-e2e-"));
  const planPath = join(storageDir, "plan.json");
  writeFileSync(planPath, JSON.stringify(E2E_PLAN));

  const port = 9300 + (process.pid % 400);
  const url = `ws://127.0.0.1:${port}/ws`;
  const proc: ChildProcessWithoutNullStreams = spawn(
    "weldkit",
    [
      "serve",
      "--host",
      "127.0.0.1",
      "--port",
      String(port),
      "--storage-dir",
      storageDir,
      "--lesson-plan",
      planPath,
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  const logs: string[] = [];
  proc.stdout.on("data", (d) => logs.push(d.toString()));
  proc.stderr.on("data", (d) => logs.push(d.toString()));
  let exited = false;
  proc.on("exit", () => {
    exited = true;
  });

  const deadline = Date.now() + 30_000;
  for (;;) {
    if (exited) throw new Error(`engine exited during startup:\n${logs.join("")}`);
    try {
      const probe = await nodeSocket(url)();
      probe.close();
      break;
    } catch {
      if (Date.now() > deadline) {
        proc.kill();
        throw new Error(`engine not reachable at ${url}:\n${logs.join("")}`);
      }
      await sleep(250);
    }
  }

  return {
    url,
    storageDir,
    stop: async () => {
      proc.kill("SIGTERM");
      await new Promise<void>((resolve) => {
        if (exited) return resolve();
        proc.on("exit", () => resolve());
        setTimeout(() => {
          proc.kill("SIGKILL");
          resolve();
        }, 5000);
      });
    },
  };
}
