/** Canvas drawing for the four panels: camera frame, minimap, gauges, G-G.
 *
 * The camera panel deliberately scales the raw observation with smoothing
 * off — pixelated is correct, it is exactly what the network sees.
 */

import type { StateMsg, TrackInfo } from "./protocol.js";
import type { Bounds, GGPoint } from "./telemetry.js";
import { worldToCanvas } from "./telemetry.js";

export function drawFrame(
  ctx: CanvasRenderingContext2D, img: CanvasImageSource,
): void {
  const { width, height } = ctx.canvas;
  ctx.imageSmoothingEnabled = false;
  ctx.fillStyle = "#000";
  ctx.fillRect(0, 0, width, height);
  ctx.drawImage(img, 0, 0, width, height);
}

const MINIMAP_MARGIN = 14;

export function drawMinimap(
  ctx: CanvasRenderingContext2D, track: TrackInfo, bounds: Bounds,
  state: StateMsg | null,
): void {
  const { width, height } = ctx.canvas;
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, width, height);

  // closed centerline: closePath joins the lap-wrap seam without a kink
  ctx.strokeStyle = "#4f6b8f";
  ctx.lineWidth = 2;
  ctx.beginPath();
  track.polyline.forEach(([x, y], i) => {
    const [px, py] = worldToCanvas(x, y, bounds, width, height, MINIMAP_MARGIN);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.closePath();
  ctx.stroke();

  if (!state) return;
  const [vx, vy] = worldToCanvas(state.x, state.y, bounds, width, height,
                                 MINIMAP_MARGIN);
  // heading triangle; canvas y is flipped, so the world angle negates
  const a = -state.heading;
  ctx.fillStyle = state.recording ? "#ff5252" : "#ffd24f";
  ctx.beginPath();
  ctx.moveTo(vx + 7 * Math.cos(a), vy + 7 * Math.sin(a));
  ctx.lineTo(vx + 5 * Math.cos(a + 2.5), vy + 5 * Math.sin(a + 2.5));
  ctx.lineTo(vx + 5 * Math.cos(a - 2.5), vy + 5 * Math.sin(a - 2.5));
  ctx.closePath();
  ctx.fill();
}

export function drawGauges(
  ctx: CanvasRenderingContext2D, state: StateMsg | null, maxSpeed: number,
): void {
  const { width, height } = ctx.canvas;
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, width, height);
  const speed = state?.speed ?? 0;
  const target = state?.target_speed ?? null;

  const barX = 16, barW = width - 32, barH = 18;
  const frac = Math.min(speed / maxSpeed, 1);

  ctx.fillStyle = "#223047";
  ctx.fillRect(barX, 18, barW, barH);
  ctx.fillStyle = "#53c2ff";
  ctx.fillRect(barX, 18, barW * frac, barH);

  if (target !== null && target > 0) {
    const tx = barX + barW * Math.min(target / maxSpeed, 1);
    ctx.strokeStyle = "#ffd24f";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(tx, 12);
    ctx.lineTo(tx, 18 + barH + 6);
    ctx.stroke();
  }

  ctx.fillStyle = "#e8edf4";
  ctx.font = "15px system-ui, sans-serif";
  ctx.fillText(`${speed.toFixed(1)} m/s`, barX, 18 + barH + 24);
  ctx.fillStyle = "#9fb0c4";
  ctx.fillText(target !== null ? `target ${target.toFixed(1)} m/s` : "no target",
               barX + 110, 18 + barH + 24);

  // pedals + steering as thin bars
  const act = state?.action ?? { steering: 0, throttle: 0, brake: 0 };
  const rowY = height - 46;
  const half = barW / 2;
  ctx.fillStyle = "#223047";
  ctx.fillRect(barX, rowY, barW, 8);
  ctx.fillStyle = "#9ce77a";
  ctx.fillRect(barX, rowY, barW * act.throttle, 8);
  ctx.fillStyle = "#223047";
  ctx.fillRect(barX, rowY + 12, barW, 8);
  ctx.fillStyle = "#ff7a7a";
  ctx.fillRect(barX, rowY + 12, barW * act.brake, 8);
  // steering: center-out bar, wire-positive (left) drawn to the left
  ctx.fillStyle = "#223047";
  ctx.fillRect(barX, rowY + 24, barW, 8);
  ctx.fillStyle = "#d3b4ff";
  const sw = half * Math.abs(act.steering);
  ctx.fillRect(act.steering >= 0 ? barX + half - sw : barX + half, rowY + 24, sw, 8);
}

const GG_RANGE = 8; // m/s^2 full scale on both axes

export function drawGG(
  ctx: CanvasRenderingContext2D, points: readonly GGPoint[], windowSec: number,
): void {
  const { width, height } = ctx.canvas;
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, width, height);

  ctx.strokeStyle = "#2c3a50";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(width / 2, 0);
  ctx.lineTo(width / 2, height);
  ctx.moveTo(0, height / 2);
  ctx.lineTo(width, height / 2);
  ctx.stroke();
  ctx.fillStyle = "#9fb0c4";
  ctx.font = "11px system-ui, sans-serif";
  ctx.fillText("lat →", width - 34, height / 2 - 6);
  ctx.fillText("long ↑", width / 2 + 6, 12);

  const now = points.length > 0 ? points[points.length - 1]!.t : 0;
  for (const p of points) {
    const px = width / 2 + (p.aLat / GG_RANGE) * (width / 2 - 8);
    const py = height / 2 - (p.aLong / GG_RANGE) * (height / 2 - 8);
    const age = Math.min((now - p.t) / windowSec, 1);
    ctx.fillStyle = `rgba(83, 194, 255, ${(1 - age) * 0.85 + 0.15})`;
    ctx.fillRect(px - 1.5, py - 1.5, 3, 3);
  }
}
