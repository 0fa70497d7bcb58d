/** The .lseg mask container, byte-identical to the server's serializer.
 *
 * Layout (little-endian): magic "LSEG" | version u16 = 1 | width u32 |
 * height u32 | layer count u16 | per layer in canonical order:
 * name length u16, UTF-8 name, payload length u32, RLE payload.
 * The RLE payload alternates zero-runs and one-runs as u32, starting with
 * a zero-run (possibly 0), summing to width*height.
 */

import { canonicalOrder } from "./layers.js";

export const LSEG_VERSION = 1;
const MAGIC = [0x4c, 0x53, 0x45, 0x47]; // "LSEG"

export class MalformedMask extends Error {}

export interface ParsedMask {
  width: number;
  height: number;
  layers: Map<string, Uint8Array>;
}

export function encodeRle(bits: Uint8Array): Uint8Array {
  const runs: number[] = [];
  let current = 0;
  let runLength = 0;
  for (let i = 0; i < bits.length; i++) {
    const value = bits[i] ? 1 : 0;
    if (value === current) {
      runLength++;
    } else {
      runs.push(runLength);
      current = value;
      runLength = 1;
    }
  }
  runs.push(runLength);
  const out = new Uint8Array(runs.length * 4);
  const view = new DataView(out.buffer);
  runs.forEach((run, index) => view.setUint32(index * 4, run, true));
  return out;
}

export function decodeRle(payload: Uint8Array, width: number, height: number): Uint8Array {
  if (payload.length % 4 !== 0) {
    throw new MalformedMask(`payload length ${payload.length} not a multiple of 4`);
  }
  const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  const bits = new Uint8Array(width * height);
  let position = 0;
  let value = 0;
  for (let i = 0; i < payload.length / 4; i++) {
    const run = view.getUint32(i * 4, true);
    if (position + run > bits.length) {
      throw new MalformedMask("runs exceed raster size");
    }
    if (value === 1) bits.fill(1, position, position + run);
    position += run;
    value = 1 - value;
  }
  if (position !== bits.length) {
    throw new MalformedMask(`runs sum to ${position}, expected ${bits.length}`);
  }
  return bits;
}

export function serializeMask(
  width: number,
  height: number,
  layers: Map<string, Uint8Array>,
  classOrder: Map<string, number>,
): Uint8Array {
  const encoder = new TextEncoder();
  const parts: Uint8Array[] = [];
  const header = new Uint8Array(4 + 2 + 4 + 4 + 2);
  const view = new DataView(header.buffer);
  MAGIC.forEach((byte, i) => (header[i] = byte));
  view.setUint16(4, LSEG_VERSION, true);
  view.setUint32(6, width, true);
  view.setUint32(10, height, true);
  view.setUint16(14, layers.size, true);
  parts.push(header);

  for (const name of canonicalOrder(layers.keys(), classOrder)) {
    const nameBytes = encoder.encode(name);
    const payload = encodeRle(layers.get(name)!);
    const meta = new Uint8Array(2 + nameBytes.length + 4);
    const metaView = new DataView(meta.buffer);
    metaView.setUint16(0, nameBytes.length, true);
    meta.set(nameBytes, 2);
    metaView.setUint32(2 + nameBytes.length, payload.length, true);
    parts.push(meta, payload);
  }

  const total = parts.reduce((sum, part) => sum + part.length, 0);
  const out = new Uint8Array(total);
  let offset = 0;
  for (const part of parts) {
    out.set(part, offset);
    offset += part.length;
  }
  return out;
}

export function parseMask(data: Uint8Array): ParsedMask {
  if (data.length < 4 || !MAGIC.every((byte, i) => data[i] === byte)) {
    throw new MalformedMask("bad magic");
  }
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  if (data.length < 16) throw new MalformedMask("truncated header");
  const version = view.getUint16(4, true);
  if (version !== LSEG_VERSION) throw new MalformedMask(`unsupported version ${version}`);
  const width = view.getUint32(6, true);
  const height = view.getUint32(10, true);
  const layerCount = view.getUint16(14, true);
  const decoder = new TextDecoder("utf-8", { fatal: true });

  const layers = new Map<string, Uint8Array>();
  let pos = 16;
  for (let i = 0; i < layerCount; i++) {
    if (pos + 2 > data.length) throw new MalformedMask("truncated name length");
    const nameLength = view.getUint16(pos, true);
    pos += 2;
    if (nameLength === 0) throw new MalformedMask("empty layer name");
    if (pos + nameLength > data.length) throw new MalformedMask("truncated name");
    const name = decoder.decode(data.subarray(pos, pos + nameLength));
    pos += nameLength;
    if (layers.has(name)) throw new MalformedMask(`duplicate layer ${name}`);
    if (pos + 4 > data.length) throw new MalformedMask("truncated payload length");
    const payloadLength = view.getUint32(pos, true);
    pos += 4;
    if (pos + payloadLength > data.length) throw new MalformedMask("truncated payload");
    layers.set(name, decodeRle(data.subarray(pos, pos + payloadLength), width, height));
    pos += payloadLength;
  }
  if (pos !== data.length) throw new MalformedMask("trailing bytes");
  return { width, height, layers };
}
