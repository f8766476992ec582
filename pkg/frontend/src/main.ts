/** Browser wiring: DOM events in, canvas frames out. */

import { BoothClient, browserSocket } from "./client.js";
import { ControlRig, CouponView } from "./controls.js";
import { parseSessionLog, ReplayModel } from "./replay.js";
import { FRAME_RATE } from "./torch.js";
import { drawBooth, RECAL_DOT } from "./render.js";
import type { BoothModel } from "./widgets.js";
import { initialModel } from "./widgets.js";

const canvas = document.getElementById("booth") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const view = new CouponView(canvas.width, canvas.height);
const rig = new ControlRig();

const statusEl = document.getElementById("status")!;
const wsUrl =
  new URLSearchParams(location.search).get("server") ?? "ws://127.0.0.1:8765/ws";

const client = new BoothClient(browserSocket(wsUrl), {
  participant: new URLSearchParams(location.search).get("participant") ?? "P01",
  sequence: "AR-first",
  condition: "AR",
});

let replay: ReplayModel | null = null;
let replayLine = 0;
let replayT = 0;
let replayRate = 1;
let replayPlaying = false;

client.onChange((model) => {
  statusEl.textContent = describe(model);
});

function describe(model: BoothModel): string {
  if (model.paused) return "connection lost (progress checkpointed)";
  if (model.lastError) return `${model.lastError.error}: ${model.lastError.detail}`;
  switch (model.phase) {
    case "idle":
      return "not connected";
    case "between":
      return "ready; tap the glowing dot to recalibrate, or start a line";
    case "welding":
      return "welding: hold the pointer button, drag along the dotted line";
    case "summary":
      return "line finished";
    case "done":
      return "lesson complete";
    case "closed":
      return "session closed";
  }
}

// --- Controls ---------------------------------------------------------------

canvas.addEventListener("pointermove", (ev) => {
  const rect = canvas.getBoundingClientRect();
  const { u, v } = view.toGrid(ev.clientX - rect.left, ev.clientY - rect.top);
  rig.apply({ kind: "pointer", u, v });
});

canvas.addEventListener("pointerdown", async (ev) => {
  if (client.model.paused) {
    await client.reconnect().catch(() => undefined);
    return;
  }
  const rect = canvas.getBoundingClientRect();
  const { u, v } = view.toGrid(ev.clientX - rect.left, ev.clientY - rect.top);
  const dot = view.toPx(RECAL_DOT.u, RECAL_DOT.v);
  const nearDot = Math.hypot(ev.clientX - rect.left - dot.x, ev.clientY - rect.top - dot.y) < 18;
  if (client.model.phase !== "welding" && nearDot) {
    await client.tapAt(RECAL_DOT.u, RECAL_DOT.v, rig.snapshot()).catch(() => undefined);
    return;
  }
  rig.apply({ kind: "pointer", u, v });
  rig.apply({ kind: "trigger", down: true });
});

canvas.addEventListener("pointerup", () => rig.apply({ kind: "trigger", down: false }));
canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  rig.apply({ kind: "wheel", deltaY: ev.deltaY });
});
window.addEventListener("keydown", (ev) => {
  if (ev.key === " ") rig.apply({ kind: "trigger", down: true });
  else rig.apply({ kind: "key", key: ev.key });
});
window.addEventListener("keyup", (ev) => {
  if (ev.key === " ") rig.apply({ kind: "trigger", down: false });
});

// --- Buttons ----------------------------------------------------------------

document.getElementById("connect")!.addEventListener("click", () => {
  void client.connect().catch((e) => (statusEl.textContent = String(e)));
});
document.getElementById("start-line")!.addEventListener("click", () => {
  void client.startLine().catch(() => undefined);
});
document.getElementById("end-line")!.addEventListener("click", () => {
  void client.endLine().catch(() => undefined);
});
document.getElementById("assist")!.addEventListener("change", (ev) => {
  const value = (ev.target as HTMLSelectElement).value;
  void client
    .setAssist(value === "plan" ? null : value === "on")
    .catch(() => undefined);
});
document.getElementById("bye")!.addEventListener("click", () => {
  void client.bye().catch(() => undefined);
});

// --- Replay view ------------------------------------------------------------

const replayFile = document.getElementById("replay-file") as HTMLInputElement;
const scrub = document.getElementById("scrub") as HTMLInputElement;
const rateSel = document.getElementById("rate") as HTMLSelectElement;
const lineSel = document.getElementById("replay-line") as HTMLSelectElement;
const playBtn = document.getElementById("play") as HTMLButtonElement;

replayFile.addEventListener("change", async () => {
  const file = replayFile.files?.[0];
  if (!file) return;
  try {
    replay = new ReplayModel(parseSessionLog(await file.text()));
    replayLine = 0;
    replayT = replay.span(0)[0];
    lineSel.innerHTML = "";
    for (let i = 0; i < replay.lineCount; i += 1) {
      const opt = document.createElement("option");
      opt.value = String(i);
      opt.textContent = `line ${i} (${replay.line(i).module})`;
      lineSel.appendChild(opt);
    }
    statusEl.textContent = `replaying ${file.name}: ${replay.lineCount} lines`;
  } catch (e) {
    // Schema problems surface verbatim.
    statusEl.textContent = String((e as Error).message);
    replay = null;
  }
});
lineSel.addEventListener("change", () => {
  if (!replay) return;
  replayLine = Number(lineSel.value);
  replayT = replay.span(replayLine)[0];
});
scrub.addEventListener("input", () => {
  if (!replay) return;
  const [start, end] = replay.span(replayLine);
  replayT = start + ((end - start) * Number(scrub.value)) / 1000;
  replayPlaying = false;
});
rateSel.addEventListener("change", () => (replayRate = Number(rateSel.value)));
playBtn.addEventListener("click", () => (replayPlaying = !replayPlaying));

// --- Loops ------------------------------------------------------------------

// Fixed-step frame synthesis; held values repeat between inputs.
let acc = 0;
let last = performance.now();
function tick(now: number): void {
  acc += now - last;
  last = now;
  const step = 1000 / FRAME_RATE;
  while (acc >= step) {
    acc -= step;
    if (client.connected && client.model.phase === "welding") {
      void client.sendFrame(rig.snapshot()).catch(() => undefined);
    }
    if (replay && replayPlaying) {
      replayT += (step / 1000) * replayRate;
      const [, end] = replay.span(replayLine);
      if (replayT >= end) {
        replayT = end;
        replayPlaying = false;
      }
    }
  }
  render();
  requestAnimationFrame(tick);
}

function render(): void {
  if (replay) {
    const rec = replay.line(replayLine);
    const viewAt = replay.viewAt(replayLine, replayT);
    const model: BoothModel = {
      ...initialModel(),
      phase: "welding",
      widgets: viewAt.widgets,
      guide: rec.line_spec,
      badge: {
        module: `${rec.module} (replay${viewAt.driftBadge ? ", drift" : ""})`,
        n: rec.line_index + 1,
        total: rec.line_index + 1,
      },
      lastSample:
        viewAt.sampleIndex === null ? null : (rec.samples[viewAt.sampleIndex] ?? null),
    };
    drawBooth(ctx, model, rig.snapshot(), view);
    return;
  }
  drawBooth(ctx, client.model, rig.snapshot(), view);
}

requestAnimationFrame(tick);
