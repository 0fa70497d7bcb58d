/** Binary mask layers over a fixed raster, row-major, one byte per pixel (0/1). */

export interface LabelClassSpec {
  name: string;
  displayOrder: number;
  defaultOpacity: number;
  color: string;
}

export const DEFAULT_CLASSES: LabelClassSpec[] = [
  { name: "arteriole", displayOrder: 0, defaultOpacity: 0.55, color: "#e4572e" },
  { name: "venule", displayOrder: 1, defaultOpacity: 0.55, color: "#2e86e4" },
];

export function emptyLayer(width: number, height: number): Uint8Array {
  return new Uint8Array(width * height);
}

export function cloneLayers(layers: Map<string, Uint8Array>): Map<string, Uint8Array> {
  const out = new Map<string, Uint8Array>();
  for (const [name, bits] of layers) out.set(name, bits.slice());
  return out;
}

export function layersEqual(a: Uint8Array, b: Uint8Array): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) if (a[i] !== b[i]) return false;
  return true;
}

/** Canonical layer order: ascending display order, ties by name. */
export function canonicalOrder(
  names: Iterable<string>,
  classOrder: Map<string, number>,
): string[] {
  return [...names].sort((a, b) => {
    const da = classOrder.get(a) ?? 0;
    const db = classOrder.get(b) ?? 0;
    if (da !== db) return da - db;
    return a < b ? -1 : a > b ? 1 : 0;
  });
}
