/** Canvas renderer: peripheral widget panels around a clear center.
 *
 * Pure drawing; everything it shows comes from the BoothModel and the
 * control state. Panel positions are configurable fractions of the
 * canvas so any widget (the speed gauge in particular) can be kept
 * inside the default viewport.
 */

import type { Parameter } from "./protocol.js";
import { PARAMETERS } from "./protocol.js";
import type { ControlState } from "./torch.js";
import { M_PER_INCH } from "./torch.js";
import type { BoothModel, ParamWidget } from "./widgets.js";
import { CouponView } from "./controls.js";

export interface PanelLayout {
  /** Panel centers as fractions of canvas width/height. */
  panels: Record<Parameter, { fx: number; fy: number }>;
}

export const DEFAULT_LAYOUT: PanelLayout = {
  panels: {
    ctwd: { fx: 0.11, fy: 0.5 },
    travel_angle: { fx: 0.5, fy: 0.09 },
    work_angle: { fx: 0.89, fy: 0.5 },
    speed: { fx: 0.5, fy: 0.87 },
  },
};

const PANEL_W = 170;
const PANEL_H = 64;

const TITLES: Record<Parameter, string> = {
  ctwd: "CTWD",
  travel_angle: "Travel angle",
  work_angle: "Work angle",
  speed: "Speed",
};

export interface RecalDot {
  u: number;
  v: number;
}

/** The glowing tap target sits at the grid origin between lines. */
export const RECAL_DOT: RecalDot = { u: 0, v: 0 };

export function drawBooth(
  ctx: CanvasRenderingContext2D,
  model: BoothModel,
  controls: ControlState,
  view: CouponView,
  layout: PanelLayout = DEFAULT_LAYOUT,
): void {
  const { widthPx: w, heightPx: h } = view;
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#14181c";
  ctx.fillRect(0, 0, w, h);

  drawCoupon(ctx, model, controls, view);
  for (const parameter of PARAMETERS) {
    const { fx, fy } = layout.panels[parameter];
    drawPanel(ctx, model.widgets[parameter], TITLES[parameter], fx * w, fy * h);
  }
  drawBadge(ctx, model);
  if (model.phase === "between" || model.phase === "summary") drawRecalDot(ctx, view);
  if (model.summary) drawSummary(ctx, model, w, h);
  if (model.lastError) drawErrorToast(ctx, model.lastError.detail, w, h);
  if (model.paused) drawPausedOverlay(ctx, w, h);
}

function drawCoupon(
  ctx: CanvasRenderingContext2D,
  model: BoothModel,
  controls: ControlState,
  view: CouponView,
): void {
  // Coupon outline: 2 x 4 inch plate centered on the guide line.
  const couponW = 4 * M_PER_INCH * view.pxPerM;
  const couponH = 2 * M_PER_INCH * view.pxPerM;
  const origin = view.toPx(0, 0);
  ctx.strokeStyle = "#3a4148";
  ctx.lineWidth = 2;
  ctx.strokeRect(origin.x - couponW * 0.1, origin.y - couponH / 2, couponW, couponH);

  if (model.guide) {
    const start = view.toPx(0, 0);
    const end = view.toPx(model.guide.length, 0);
    ctx.save();
    ctx.setLineDash([6, 6]);
    ctx.strokeStyle = "rgba(255,255,255,0.9)";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(start.x, start.y);
    ctx.lineTo(end.x, end.y);
    ctx.stroke();
    ctx.restore();
  }

  // Tip marker from the engine's sample when streaming, controls otherwise.
  const sample = model.lastSample;
  const tip =
    sample && Number.isFinite(sample.tip_u) && Number.isFinite(sample.tip_v)
      ? view.toPx(sample.tip_u, sample.tip_v)
      : view.toPx(controls.u, controls.v);
  ctx.strokeStyle = controls.triggerDown ? "#ffd04d" : "#9aa4ad";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(tip.x - 8, tip.y);
  ctx.lineTo(tip.x + 8, tip.y);
  ctx.moveTo(tip.x, tip.y - 8);
  ctx.lineTo(tip.x, tip.y + 8);
  ctx.stroke();
}

function drawPanel(
  ctx: CanvasRenderingContext2D,
  widget: ParamWidget,
  title: string,
  cx: number,
  cy: number,
): void {
  const x = cx - PANEL_W / 2;
  const y = cy - PANEL_H / 2;
  ctx.fillStyle = "rgba(28,34,40,0.55)";
  ctx.fillRect(x, y, PANEL_W, PANEL_H);

  ctx.fillStyle = "#c8d0d8";
  ctx.font = "13px system-ui, sans-serif";
  ctx.textAlign = "left";
  ctx.fillText(title, x + 10, y + 18);

  if (widget.state === null) {
    ctx.fillStyle = "#5a646e";
    ctx.beginPath();
    ctx.arc(x + PANEL_W - 22, y + 20, 8, 0, 2 * Math.PI);
    ctx.fill();
    return;
  }
  if (widget.state === "within") {
    ctx.fillStyle = "#3dbb6e";
    ctx.beginPath();
    ctx.arc(x + PANEL_W - 22, y + 20, 8, 0, 2 * Math.PI);
    ctx.fill();
    return;
  }
  // Off range: red wash over the panel plus the corrective text.
  ctx.fillStyle = "rgba(204,52,43,0.45)";
  ctx.fillRect(x, y, PANEL_W, PANEL_H);
  ctx.fillStyle = "#ff6b5e";
  ctx.beginPath();
  ctx.arc(x + PANEL_W - 22, y + 20, 8, 0, 2 * Math.PI);
  ctx.fill();
  ctx.fillStyle = "#ffe8e5";
  ctx.font = "12px system-ui, sans-serif";
  const label = widget.arrow ? `${widget.arrow} ${widget.label}` : widget.label;
  ctx.fillText(label, x + 10, y + 44);
}

function drawBadge(ctx: CanvasRenderingContext2D, model: BoothModel): void {
  if (!model.badge) return;
  ctx.fillStyle = "rgba(28,34,40,0.55)";
  ctx.fillRect(12, 12, 190, 30);
  ctx.fillStyle = "#e6ecf1";
  ctx.font = "13px system-ui, sans-serif";
  ctx.textAlign = "left";
  ctx.fillText(`${model.badge.module}: ${model.badge.n} in ${model.badge.total}`, 22, 32);
}

function drawRecalDot(ctx: CanvasRenderingContext2D, view: CouponView): void {
  const p = view.toPx(RECAL_DOT.u, RECAL_DOT.v);
  const glow = ctx.createRadialGradient(p.x, p.y, 2, p.x, p.y, 16);
  glow.addColorStop(0, "rgba(120,200,255,0.95)");
  glow.addColorStop(1, "rgba(120,200,255,0)");
  ctx.fillStyle = glow;
  ctx.beginPath();
  ctx.arc(p.x, p.y, 16, 0, 2 * Math.PI);
  ctx.fill();
  ctx.fillStyle = "#dff2ff";
  ctx.beginPath();
  ctx.arc(p.x, p.y, 4, 0, 2 * Math.PI);
  ctx.fill();
}

function drawSummary(
  ctx: CanvasRenderingContext2D,
  model: BoothModel,
  w: number,
  h: number,
): void {
  const summary = model.summary!;
  const boxW = Math.min(460, w - 80);
  const boxH = 60 + summary.bars.length * 46;
  const x = (w - boxW) / 2;
  const y = (h - boxH) / 2;
  ctx.fillStyle = "rgba(18,22,26,0.92)";
  ctx.fillRect(x, y, boxW, boxH);
  ctx.fillStyle = "#e6ecf1";
  ctx.font = "15px system-ui, sans-serif";
  ctx.textAlign = "left";
  const heading = summary.excluded
    ? `Line excluded: ${summary.exclusionReason ?? ""}`
    : model.cursor?.complete
      ? "Lesson complete"
      : "Line summary";
  ctx.fillText(heading + (summary.driftFlagged ? "  (tracking drift flagged)" : ""), x + 18, y + 28);

  ctx.font = "12px system-ui, sans-serif";
  summary.bars.forEach((bar, i) => {
    const by = y + 48 + i * 46;
    const bw = boxW - 150;
    ctx.fillStyle = "#c8d0d8";
    ctx.fillText(TITLES[bar.parameter], x + 18, by + 12);
    const seg = (pct: number) => (bw * pct) / 100;
    let bx = x + 120;
    ctx.fillStyle = "#3467c4"; // below
    ctx.fillRect(bx, by, seg(bar.pctBelow), 16);
    bx += seg(bar.pctBelow);
    ctx.fillStyle = "#3dbb6e"; // within
    ctx.fillRect(bx, by, seg(bar.pctWithin), 16);
    bx += seg(bar.pctWithin);
    ctx.fillStyle = "#cc342b"; // above
    ctx.fillRect(bx, by, seg(bar.pctAbove), 16);
    ctx.fillStyle = "#9aa4ad";
    ctx.fillText(`${bar.pctWithin.toFixed(1)}% in range`, x + 120, by + 30);
  });
}

function drawErrorToast(ctx: CanvasRenderingContext2D, detail: string, w: number, h: number): void {
  ctx.fillStyle = "rgba(140,40,34,0.9)";
  ctx.fillRect(20, h - 46, w - 40, 30);
  ctx.fillStyle = "#ffe8e5";
  ctx.font = "12px system-ui, sans-serif";
  ctx.textAlign = "left";
  ctx.fillText(detail, 30, h - 27);
}

function drawPausedOverlay(ctx: CanvasRenderingContext2D, w: number, h: number): void {
  ctx.fillStyle = "rgba(10,12,14,0.75)";
  ctx.fillRect(0, 0, w, h);
  ctx.fillStyle = "#e6ecf1";
  ctx.font = "18px system-ui, sans-serif";
  ctx.textAlign = "center";
  ctx.fillText("Connection lost", w / 2, h / 2 - 10);
  ctx.font = "13px system-ui, sans-serif";
  ctx.fillText("Progress is checkpointed; click to reconnect.", w / 2, h / 2 + 16);
  ctx.textAlign = "left";
}
