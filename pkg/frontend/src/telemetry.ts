/** Client-side telemetry state: the trailing G-G window and the
 * world-to-minimap transform.  Pure data — rendering lives in render.ts. */

export interface GGPoint {
  t: number;     // seconds, server time
  aLat: number;  // m/s^2
  aLong: number; // m/s^2
}

/** Ring of recent (a_lat, a_long) samples, pruned to a trailing window. */
export class GGTrail {
  private buf: GGPoint[] = [];

  constructor(readonly windowSec: number = 10) {}

  push(p: GGPoint): void {
    // server time restarted (new session): drop stale history
    const last = this.buf[this.buf.length - 1];
    if (last !== undefined && p.t < last.t) this.buf = [];
    this.buf.push(p);
    this.prune(p.t);
  }

  private prune(now: number): void {
    const cutoff = now - this.windowSec;
    let drop = 0;
    while (drop < this.buf.length && this.buf[drop]!.t < cutoff) drop++;
    if (drop > 0) this.buf = this.buf.slice(drop);
  }

  points(): readonly GGPoint[] {
    return this.buf;
  }

  clear(): void {
    this.buf = [];
  }
}

// -- minimap transform -------------------------------------------------------

export interface Bounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export function polylineBounds(poly: readonly [number, number][]): Bounds {
  if (poly.length === 0) throw new Error("empty polyline");
  let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
  for (const [x, y] of poly) {
    if (x < minX) minX = x;
    if (y < minY) minY = y;
    if (x > maxX) maxX = x;
    if (y > maxY) maxY = y;
  }
  return { minX, minY, maxX, maxY };
}

/** Aspect-preserving world -> canvas mapping.  World y points up, canvas y
 * points down, so the y axis flips; the track is centered in the canvas. */
export function worldToCanvas(
  x: number, y: number, b: Bounds,
  width: number, height: number, margin: number,
): [number, number] {
  const spanX = Math.max(b.maxX - b.minX, 1e-9);
  const spanY = Math.max(b.maxY - b.minY, 1e-9);
  const scale = Math.min((width - 2 * margin) / spanX,
                         (height - 2 * margin) / spanY);
  const cx = (b.minX + b.maxX) / 2;
  const cy = (b.minY + b.maxY) / 2;
  return [
    width / 2 + (x - cx) * scale,
    height / 2 - (y - cy) * scale,
  ];
}
