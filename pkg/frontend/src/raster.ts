/** Brush rasterization, arithmetic-identical to the server's geometry.
 *
 * A pixel (integer center) is inside the stroke iff its squared distance
 * to the polyline is <= radius^2. All math is IEEE double in the same
 * operation order as the server, so the same stroke yields the same
 * pixels on both sides.
 */

export interface Point {
  x: number;
  y: number;
}

export function rasterizeStroke(
  points: Point[],
  radius: number,
  width: number,
  height: number,
): Uint8Array {
  if (points.length === 0) throw new Error("stroke needs at least one point");
  if (radius < 0) throw new Error("radius must be >= 0");

  const bits = new Uint8Array(width * height);
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const xLo = Math.max(0, Math.floor(Math.min(...xs) - radius));
  const xHi = Math.min(width - 1, Math.ceil(Math.max(...xs) + radius));
  const yLo = Math.max(0, Math.floor(Math.min(...ys) - radius));
  const yHi = Math.min(height - 1, Math.ceil(Math.max(...ys) + radius));
  if (xLo > xHi || yLo > yHi) return bits;

  const segments: Array<[Point, Point]> =
    points.length > 1
      ? points.slice(0, -1).map((p, i) => [p, points[i + 1]] as [Point, Point])
      : [[points[0], points[0]]];

  const r2 = radius * radius;
  for (let py = yLo; py <= yHi; py++) {
    for (let px = xLo; px <= xHi; px++) {
      let best = Infinity;
      for (const [a, b] of segments) {
        const dx = b.x - a.x;
        const dy = b.y - a.y;
        const segLen2 = dx * dx + dy * dy;
        let ex: number;
        let ey: number;
        if (segLen2 === 0) {
          ex = px - a.x;
          ey = py - a.y;
        } else {
          let t = ((px - a.x) * dx + (py - a.y) * dy) / segLen2;
          t = Math.min(1, Math.max(0, t));
          ex = px - (a.x + t * dx);
          ey = py - (a.y + t * dy);
        }
        const d2 = ex * ex + ey * ey;
        if (d2 < best) best = d2;
      }
      if (best <= r2) bits[py * width + px] = 1;
    }
  }
  return bits;
}
