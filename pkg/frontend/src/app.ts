/** Browser shell: canvas rendering, pointer/keyboard handling, toolbar.
 *
 * Everything that determines submitted bytes lives in editor.ts; this file
 * only presents it. Keyboard shortcuts are listed in the README.
 */

import { ApiClient, ApiError, Task } from "./api.js";
import { DraftStore } from "./drafts.js";
import { Editor } from "./editor.js";
import { DEFAULT_CLASSES, LabelClassSpec } from "./layers.js";
import { Point } from "./raster.js";
import { TaskSession } from "./session.js";

interface AppConfig {
  serverUrl: string;
  token: string;
  classes?: LabelClassSpec[];
}

class AnnotationApp {
  private readonly api: ApiClient;
  private readonly session: TaskSession;
  private readonly classes: LabelClassSpec[];
  private editor: Editor | null = null;
  private task: Task | null = null;
  private baseImage: ImageBitmap | null = null;
  private enhancedImage: ImageBitmap | null = null;
  private canvas: HTMLCanvasElement;
  private status: HTMLElement;
  private pointerPath: Point[] = [];
  private drawing = false;
  private panning = false;
  private panStart: Point = { x: 0, y: 0 };
  private busy = false;

  constructor(config: AppConfig) {
    this.classes = config.classes ?? DEFAULT_CLASSES;
    this.api = new ApiClient(config.serverUrl, config.token);
    this.session = new TaskSession(this.api, new DraftStore(localStorage), this.classes);
    this.canvas = document.getElementById("editor-canvas") as HTMLCanvasElement;
    this.status = document.getElementById("status")!;
    this.bindUi();
  }

  private setStatus(text: string) {
    this.status.textContent = text;
  }

  private bindUi() {
    document.getElementById("btn-load")!.addEventListener("click", () => {
      void this.loadNextTask(false);
    });
    document.getElementById("btn-load-preseg")!.addEventListener("click", () => {
      void this.loadNextTask(true);
    });
    document.getElementById("btn-submit")!.addEventListener("click", () => {
      void this.submit();
    });
    document.getElementById("btn-skip")!.addEventListener("click", () => {
      void this.skip();
    });
    document.getElementById("btn-contrast")!.addEventListener("click", () => {
      void this.toggleContrast();
    });

    this.canvas.addEventListener("pointerdown", (event) => this.onPointerDown(event));
    this.canvas.addEventListener("pointermove", (event) => this.onPointerMove(event));
    this.canvas.addEventListener("pointerup", (event) => this.onPointerUp(event));
    this.canvas.addEventListener("wheel", (event) => this.onWheel(event), { passive: false });
    window.addEventListener("keydown", (event) => this.onKey(event));
    window.addEventListener("beforeunload", (event) => {
      if (this.editor?.dirty) event.preventDefault();
    });
  }

  private async loadNextTask(usePreseg: boolean) {
    try {
      const tasks = await this.api.myTasks();
      if (tasks.length === 0) {
        this.setStatus("no open tasks");
        return;
      }
      const loaded = await this.session.loadTask(tasks[0], usePreseg);
      this.task = loaded.task;
      this.editor = loaded.editor;
      this.baseImage = await createImageBitmap(new Blob([loaded.imageBytes]));
      this.enhancedImage = null;
      const resumed = loaded.resumedFromDraft ? " (resumed draft)" : "";
      this.setStatus(
        `task ${loaded.task.task_id} quality ${loaded.quality.grade.toFixed(1)}/10${resumed}`);
      this.renderClassBar();
      this.render();
    } catch (error) {
      this.report(error);
    }
  }

  private renderClassBar() {
    const bar = document.getElementById("classes")!;
    bar.innerHTML = "";
    if (!this.editor) return;
    for (const spec of this.classes) {
      const button = document.createElement("button");
      button.textContent = spec.name;
      button.style.borderBottom = `3px solid ${spec.color}`;
      button.classList.toggle("active", this.editor.activeClass === spec.name);
      button.addEventListener("click", () => {
        this.editor!.setActiveClass(spec.name);
        this.renderClassBar();
      });
      const slider = document.createElement("input");
      slider.type = "range";
      slider.min = "0";
      slider.max = "100";
      slider.value = String((this.editor.opacity.get(spec.name) ?? 0.5) * 100);
      slider.addEventListener("input", () => {
        this.editor!.setOpacity(spec.name, Number(slider.value) / 100);
        this.render();
      });
      bar.append(button, slider);
    }
  }

  private onPointerDown(event: PointerEvent) {
    if (!this.editor) return;
    this.canvas.setPointerCapture(event.pointerId);
    if (event.shiftKey || event.button === 1) {
      this.panning = true;
      this.panStart = { x: event.offsetX, y: event.offsetY };
      return;
    }
    this.drawing = true;
    this.pointerPath = [{ x: event.offsetX, y: event.offsetY }];
  }

  private onPointerMove(event: PointerEvent) {
    if (!this.editor) return;
    if (this.panning) {
      const view = this.editor.view;
      this.editor.setView(
        view.scale,
        view.panX + (event.offsetX - this.panStart.x),
        view.panY + (event.offsetY - this.panStart.y));
      this.panStart = { x: event.offsetX, y: event.offsetY };
      this.render();
      return;
    }
    if (this.drawing) {
      this.pointerPath.push({ x: event.offsetX, y: event.offsetY });
      this.render();
    }
  }

  private onPointerUp(event: PointerEvent) {
    this.canvas.releasePointerCapture(event.pointerId);
    if (this.panning) {
      this.panning = false;
      return;
    }
    if (this.drawing && this.editor && this.pointerPath.length > 0) {
      this.editor.drawStroke(this.pointerPath, this.editor.erase);
      if (this.task) this.session.saveDraft(this.task, this.editor);
      this.pointerPath = [];
      this.drawing = false;
      this.render();
    }
  }

  private onWheel(event: WheelEvent) {
    if (!this.editor) return;
    event.preventDefault();
    const view = this.editor.view;
    const factor = event.deltaY < 0 ? 1.25 : 0.8;
    const scale = Math.min(32, Math.max(0.125, view.scale * factor));
    // zoom about the cursor
    const cx = event.offsetX;
    const cy = event.offsetY;
    const panX = cx - (cx - view.panX) * (scale / view.scale);
    const panY = cy - (cy - view.panY) * (scale / view.scale);
    this.editor.setView(scale, panX, panY);
    this.render();
  }

  private onKey(event: KeyboardEvent) {
    if (!this.editor) return;
    if (event.key === "z" && (event.ctrlKey || event.metaKey)) {
      this.editor.undo();
      this.render();
    } else if (event.key === "y" && (event.ctrlKey || event.metaKey)) {
      this.editor.redo();
      this.render();
    } else if (event.key === "e") {
      this.editor.erase = !this.editor.erase;
      this.setStatus(this.editor.erase ? "eraser on" : "eraser off");
    } else if (event.key === "[") {
      this.editor.brushRadius = Math.max(0, this.editor.brushRadius - 1);
      this.setStatus(`brush ${this.editor.brushRadius}px`);
    } else if (event.key === "]") {
      this.editor.brushRadius = Math.min(64, this.editor.brushRadius + 1);
      this.setStatus(`brush ${this.editor.brushRadius}px`);
    } else if (event.key === "c") {
      void this.toggleContrast();
    } else if (event.key >= "1" && event.key <= "9") {
      const index = Number(event.key) - 1;
      if (index < this.classes.length) {
        this.editor.setActiveClass(this.classes[index].name);
        this.renderClassBar();
      }
    }
  }

  private async toggleContrast() {
    if (!this.editor || !this.task) return;
    const on = this.editor.toggleContrast();
    try {
      if (on && !this.enhancedImage) {
        const bytes = await this.api.enhancedBytes(this.task.image_id);
        this.enhancedImage = await createImageBitmap(new Blob([bytes]));
      }
      this.render();
    } catch (error) {
      this.editor.toggleContrast();
      this.report(error);
    }
  }

  private async submit() {
    if (!this.editor || !this.task || this.busy) return;
    this.busy = true;
    this.setStatus("submitting...");
    try {
      const entry = await this.session.submit(this.task, this.editor);
      this.setStatus(`submitted v${entry.version_no}; load the next task`);
    } catch (error) {
      this.report(error, "submit failed; your work is saved locally, retry when ready");
    } finally {
      this.busy = false;
    }
  }

  private async skip() {
    if (!this.editor || !this.task || this.busy) return;
    const reason = prompt("Why skip this image?") ?? "";
    if (!reason) return;
    this.busy = true;
    try {
      const quality = await this.api.quality(this.task.image_id);
      await this.session.skip(this.task, reason, quality.grade);
      this.setStatus("task skipped; load the next task");
      this.editor = null;
      this.task = null;
      this.render();
    } catch (error) {
      this.report(error);
    } finally {
      this.busy = false;
    }
  }

  private report(error: unknown, prefix = "") {
    if (error instanceof ApiError) {
      this.setStatus(`${prefix ? prefix + " - " : ""}${error.code} (${error.status}): `
        + error.serverMessage);
    } else {
      this.setStatus(`${prefix ? prefix + " - " : ""}${String(error)}`);
    }
  }

  private render() {
    const context = this.canvas.getContext("2d")!;
    context.setTransform(1, 0, 0, 1, 0, 0);
    context.clearRect(0, 0, this.canvas.width, this.canvas.height);
    if (!this.editor) return;
    const view = this.editor.view;
    context.setTransform(view.scale, 0, 0, view.scale, view.panX, view.panY);
    context.imageSmoothingEnabled = view.scale < 1;

    const base = this.editor.contrastMode && this.enhancedImage
      ? this.enhancedImage
      : this.baseImage;
    if (base) context.drawImage(base, 0, 0);

    for (const spec of this.classes) {
      const alpha = this.editor.opacity.get(spec.name) ?? 0;
      if (alpha <= 0) continue;
      context.globalAlpha = alpha;
      context.fillStyle = spec.color;
      const bits = this.editor.layers.get(spec.name)!;
      for (let y = 0; y < this.editor.height; y++) {
        let x = 0;
        while (x < this.editor.width) {
          if (bits[y * this.editor.width + x]) {
            let run = x;
            while (run < this.editor.width && bits[y * this.editor.width + run]) run++;
            context.fillRect(x, y, run - x, 1);
            x = run;
          } else {
            x++;
          }
        }
      }
    }
    context.globalAlpha = 1;
  }
}

export function startApp(config: AppConfig): void {
  new AnnotationApp(config);
}

declare global {
  interface Window {
    crowdsegStart: typeof startApp;
  }
}

if (typeof window !== "undefined") {
  window.crowdsegStart = startApp;
}
