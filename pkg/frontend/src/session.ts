/** Task session: loading an editor for a task and pushing results back.
 *
 * Submission flow: the current mask is written to the draft store before
 * the request goes out; transient failures leave the draft (and the layer
 * bitmaps) untouched so a retry loses nothing. The draft clears only on
 * acknowledgment. At most one submit per task is in flight.
 */

import { ApiClient, Task, QualityReport, VersionEntry } from "./api.js";
import { DraftStore } from "./drafts.js";
import { Editor } from "./editor.js";
import { LabelClassSpec } from "./layers.js";
import { parseMask } from "./lseg.js";

export interface LoadedTask {
  task: Task;
  editor: Editor;
  quality: QualityReport;
  imageBytes: ArrayBuffer;
  resumedFromDraft: boolean;
}

export class TaskSession {
  private inFlight = new Set<string>();

  constructor(
    private readonly api: ApiClient,
    private readonly drafts: DraftStore,
    private readonly classes: LabelClassSpec[],
  ) {}

  /**
   * Fetch everything the editor needs; the editor only opens on complete
   * data. Pre-segmentation seeds the layers only when asked and when no
   * draft exists; a saved draft always wins.
   */
  async loadTask(task: Task, usePresegmentation: boolean): Promise<LoadedTask> {
    const [imageBytes, quality] = await Promise.all([
      this.api.imageBytes(task.image_id),
      this.api.quality(task.image_id),
    ]);

    let initial: Map<string, Uint8Array> | undefined;
    let resumed = false;
    let width = 0;
    let height = 0;

    const draft = this.drafts.load(task.task_id);
    if (draft !== null) {
      const parsed = parseMask(draft);
      initial = parsed.layers;
      width = parsed.width;
      height = parsed.height;
      resumed = true;
    } else if (usePresegmentation) {
      const parsed = parseMask(await this.api.presegmentation(task.image_id));
      width = parsed.width;
      height = parsed.height;
      // seed every configured class that the provider produced
      initial = parsed.layers;
    }

    if (width === 0) {
      const probe = await decodePngSize(imageBytes);
      width = probe.width;
      height = probe.height;
    }

    // keep layers matching configured classes; a lone "vessel" layer from
    // the pre-segmenter seeds the first class for the annotator to correct
    const merged = new Map<string, Uint8Array>();
    if (initial) {
      for (const [name, bits] of initial) {
        if (this.classes.some((c) => c.name === name)) merged.set(name, bits);
      }
      if (merged.size === 0 && initial.has("vessel")) {
        merged.set(this.classes[0].name, initial.get("vessel")!);
      }
    }

    const editor = new Editor(width, height, this.classes, merged.size ? merged : undefined);
    if (resumed) editor.dirty = true;
    return { task, editor, quality, imageBytes, resumedFromDraft: resumed };
  }

  saveDraft(task: Task, editor: Editor): void {
    this.drafts.save(task.task_id, editor.serialize());
  }

  async submit(task: Task, editor: Editor): Promise<VersionEntry> {
    if (!editor.dirty) throw new Error("nothing to submit");
    if (this.inFlight.has(task.task_id)) throw new Error("submit already in flight");
    this.inFlight.add(task.task_id);
    const payload = editor.serialize();
    this.drafts.save(task.task_id, payload);
    try {
      const entry = await this.api.submit(task.image_id, payload);
      this.drafts.clear(task.task_id);
      editor.dirty = false;
      return entry;
    } finally {
      this.inFlight.delete(task.task_id);
    }
  }

  async skip(task: Task, reason: string, qualityGrade?: number): Promise<Task> {
    if (this.inFlight.has(task.task_id)) throw new Error("submit already in flight");
    const updated = await this.api.skip(task.task_id, reason, qualityGrade);
    this.drafts.clear(task.task_id);
    return updated;
  }
}

/** Minimal PNG IHDR probe; enough to size the raster without decoding. */
export async function decodePngSize(
  data: ArrayBuffer,
): Promise<{ width: number; height: number }> {
  const bytes = new Uint8Array(data);
  const signature = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];
  if (bytes.length < 24 || !signature.every((byte, i) => bytes[i] === byte)) {
    throw new Error("not a PNG");
  }
  const view = new DataView(data);
  return { width: view.getUint32(16, false), height: view.getUint32(20, false) };
}
