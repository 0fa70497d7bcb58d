/** Editor core: layer bitmaps, stroke application, undo/redo, view state.
 *
 * Pure logic, no DOM. Rendering and pointer handling live in app.ts; this
 * module owns everything the submitted bytes depend on, so its tests pin
 * the client/server parity contract.
 */

import { LabelClassSpec } from "./layers.js";
import { emptyLayer, layersEqual } from "./layers.js";
import { serializeMask } from "./lseg.js";
import { Point, rasterizeStroke } from "./raster.js";

export interface ViewTransform {
  scale: number;
  panX: number;
  panY: number;
}

/** One stroke's effect: the flat indices that flipped, and what they became. */
interface StrokeDelta {
  className: string;
  indices: Uint32Array;
  value: 0 | 1;
}

export class Editor {
  readonly width: number;
  readonly height: number;
  readonly classes: LabelClassSpec[];
  readonly layers = new Map<string, Uint8Array>();
  readonly opacity = new Map<string, number>();

  activeClass: string;
  brushRadius = 3;
  erase = false;
  view: ViewTransform = { scale: 1, panX: 0, panY: 0 };
  contrastMode = false;
  dirty = false;

  private undoStack: StrokeDelta[] = [];
  private redoStack: StrokeDelta[] = [];

  constructor(
    width: number,
    height: number,
    classes: LabelClassSpec[],
    initialLayers?: Map<string, Uint8Array>,
  ) {
    if (classes.length === 0) throw new Error("editor needs at least one class");
    this.width = width;
    this.height = height;
    this.classes = classes;
    for (const spec of classes) {
      const given = initialLayers?.get(spec.name);
      if (given && given.length !== width * height) {
        throw new Error(`layer ${spec.name} does not match raster size`);
      }
      this.layers.set(spec.name, given ? given.slice() : emptyLayer(width, height));
      this.opacity.set(spec.name, spec.defaultOpacity);
    }
    this.activeClass = classes[0].name;
  }

  classOrder(): Map<string, number> {
    return new Map(this.classes.map((c) => [c.name, c.displayOrder]));
  }

  /** Map a view-space point into image space (inverse view transform). */
  toImage(viewPoint: Point): Point {
    return {
      x: (viewPoint.x - this.view.panX) / this.view.scale,
      y: (viewPoint.y - this.view.panY) / this.view.scale,
    };
  }

  /** Apply a brush stroke given in view space to the active layer only. */
  drawStroke(viewPath: Point[], erase: boolean = this.erase): void {
    const imagePath = viewPath.map((p) => this.toImage(p));
    this.drawImageStroke(imagePath, erase);
  }

  /** Apply a brush stroke given directly in image space. */
  drawImageStroke(imagePath: Point[], erase: boolean = this.erase): void {
    const stroke = rasterizeStroke(imagePath, this.brushRadius, this.width, this.height);
    const layer = this.layers.get(this.activeClass)!;
    const target: 0 | 1 = erase ? 0 : 1;
    const changed: number[] = [];
    for (let i = 0; i < stroke.length; i++) {
      if (stroke[i] && layer[i] !== target) {
        layer[i] = target;
        changed.push(i);
      }
    }
    if (changed.length === 0) return;
    this.undoStack.push({
      className: this.activeClass,
      indices: Uint32Array.from(changed),
      value: target,
    });
    this.redoStack.length = 0;
    this.dirty = true;
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  get undoDepth(): number {
    return this.undoStack.length;
  }

  get canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  undo(): boolean {
    const delta = this.undoStack.pop();
    if (!delta) return false;
    const layer = this.layers.get(delta.className)!;
    const restored = delta.value === 1 ? 0 : 1;
    for (const index of delta.indices) layer[index] = restored;
    this.redoStack.push(delta);
    return true;
  }

  redo(): boolean {
    const delta = this.redoStack.pop();
    if (!delta) return false;
    const layer = this.layers.get(delta.className)!;
    for (const index of delta.indices) layer[index] = delta.value;
    this.undoStack.push(delta);
    return true;
  }

  // presentation-only state; none of these touch layer bitmaps
  setView(scale: number, panX: number, panY: number): void {
    if (scale <= 0) throw new Error("scale must be > 0");
    this.view = { scale, panX, panY };
  }

  setOpacity(className: string, value: number): void {
    if (!this.layers.has(className)) throw new Error(`unknown class ${className}`);
    this.opacity.set(className, Math.min(1, Math.max(0, value)));
  }

  toggleContrast(): boolean {
    this.contrastMode = !this.contrastMode;
    return this.contrastMode;
  }

  setActiveClass(className: string): void {
    if (!this.layers.has(className)) throw new Error(`unknown class ${className}`);
    this.activeClass = className;
  }

  /** Canonical container bytes for the current layers. */
  serialize(): Uint8Array {
    return serializeMask(this.width, this.height, this.layers, this.classOrder());
  }

  sameLayers(other: Map<string, Uint8Array>): boolean {
    if (other.size !== this.layers.size) return false;
    for (const [name, bits] of this.layers) {
      const theirs = other.get(name);
      if (!theirs || !layersEqual(bits, theirs)) return false;
    }
    return true;
  }
}
