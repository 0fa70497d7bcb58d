import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, Task } from "../src/api.js";
import { DraftStore, StorageLike } from "../src/drafts.js";
import { Editor } from "../src/editor.js";
import { LabelClassSpec } from "../src/layers.js";
import { parseMask, serializeMask } from "../src/lseg.js";
import { TaskSession, decodePngSize } from "../src/session.js";

const CLASSES: LabelClassSpec[] = [
  { name: "arteriole", displayOrder: 0, defaultOpacity: 0.5, color: "#f00" },
  { name: "venule", displayOrder: 1, defaultOpacity: 0.5, color: "#00f" },
];

const TASK: Task = {
  task_id: "t-123",
  image_id: "a".repeat(64),
  annotator_id: "a-1",
  state: "assigned",
  updated_at: "2026-01-01T00:00:00+00:00",
  quality_grade_at_skip: null,
  skip_reason: null,
};

class MemoryStorage implements StorageLike {
  private data = new Map<string, string>();
  getItem(key: string) { return this.data.get(key) ?? null; }
  setItem(key: string, value: string) { this.data.set(key, value); }
  removeItem(key: string) { this.data.delete(key); }
}

function fakePng(width: number, height: number): Uint8Array {
  // signature + IHDR length/type + width/height (big-endian), enough to probe
  const bytes = new Uint8Array(24);
  bytes.set([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
  const view = new DataView(bytes.buffer);
  view.setUint32(8, 13, false);
  bytes.set([0x49, 0x48, 0x44, 0x52], 12);
  view.setUint32(16, width, false);
  view.setUint32(20, height, false);
  return bytes;
}

interface FlakyServer {
  fetchFn: (input: string, init?: RequestInit) => Promise<Response>;
  history: Uint8Array[];
  submitAttempts: number;
}

/** In-memory stand-in for the real server; submits fail `failures` times. */
function flakyServer(failures: number, width = 16, height = 12): FlakyServer {
  const state: FlakyServer = {
    history: [],
    submitAttempts: 0,
    fetchFn: async (input: string, init?: RequestInit) => {
      const method = init?.method ?? "GET";
      if (method === "POST" && input.includes("/segmentations")) {
        state.submitAttempts++;
        if (state.submitAttempts <= failures) {
          return new Response(
            JSON.stringify({ status: 500, code: "internal", message: "flaky" }),
            { status: 500, headers: { "Content-Type": "application/json" } });
        }
        state.history.push(new Uint8Array(init!.body as ArrayBuffer));
        return new Response(
          JSON.stringify({
            image_id: TASK.image_id, version_no: state.history.length,
            blob: { digest: "d".repeat(64), size: 1 }, annotator_id: "a-1",
            created_at: "now", kind: "manual", restored_from: null,
            review: "unreviewed", reviewer_id: null, reviewed_at: null,
          }),
          { status: 201, headers: { "Content-Type": "application/json" } });
      }
      if (input.includes("/quality")) {
        return new Response(
          JSON.stringify({ grade: 7.5, sharpness: 0.5, contrast: 0.5, exposure: 0.5 }),
          { status: 200, headers: { "Content-Type": "application/json" } });
      }
      if (input.includes("/presegmentation")) {
        const vessel = new Uint8Array(width * height);
        vessel.fill(1, 0, width);
        const lseg = serializeMask(width, height, new Map([["vessel", vessel]]), new Map());
        return new Response(lseg, { status: 200 });
      }
      if (input.includes("/images/")) {
        return new Response(fakePng(width, height), { status: 200 });
      }
      if (input.includes("/skip")) {
        return new Response(JSON.stringify({ ...TASK, state: "skipped" }),
          { status: 200, headers: { "Content-Type": "application/json" } });
      }
      return new Response(JSON.stringify({ tasks: [TASK] }),
        { status: 200, headers: { "Content-Type": "application/json" } });
    },
  };
  return state;
}

function newSession(server: FlakyServer) {
  const storage = new MemoryStorage();
  const drafts = new DraftStore(storage);
  const api = new ApiClient("http://test", "token", server.fetchFn);
  return { session: new TaskSession(api, drafts, CLASSES), drafts };
}

describe("task loading", () => {
  it("opens with empty layers when pre-segmentation is not requested", async () => {
    const server = flakyServer(0);
    const { session } = newSession(server);
    const loaded = await session.loadTask(TASK, false);
    expect(loaded.editor.width).toBe(16);
    expect(loaded.editor.height).toBe(12);
    for (const bits of loaded.editor.layers.values()) {
      expect(bits.every((b) => b === 0)).toBe(true);
    }
    expect(loaded.quality.grade).toBe(7.5);
  });

  it("seeds the first class from the vessel pre-segmentation", async () => {
    const server = flakyServer(0);
    const { session } = newSession(server);
    const loaded = await session.loadTask(TASK, true);
    const seeded = loaded.editor.layers.get("arteriole")!;
    expect(seeded.slice(0, 16).every((b) => b === 1)).toBe(true);
    expect(loaded.editor.layers.get("venule")!.every((b) => b === 0)).toBe(true);
  });

  it("resumes from a saved draft in preference to anything else", async () => {
    const server = flakyServer(0);
    const { session, drafts } = newSession(server);
    const bits = new Uint8Array(16 * 12);
    bits[5] = 1;
    const draft = serializeMask(16, 12, new Map([["venule", bits]]), new Map());
    drafts.save(TASK.task_id, draft);
    const loaded = await session.loadTask(TASK, true);
    expect(loaded.resumedFromDraft).toBe(true);
    expect(loaded.editor.dirty).toBe(true);
    expect(loaded.editor.layers.get("venule")![5]).toBe(1);
  });
});

describe("submit resilience", () => {
  it("transient 500s lose no data and the retry grows history by one", async () => {
    const server = flakyServer(2);
    const { session, drafts } = newSession(server);
    const editor = new Editor(16, 12, CLASSES);
    editor.brushRadius = 2;
    editor.drawStroke([{ x: 4, y: 4 }, { x: 10, y: 8 }]);
    const payload = editor.serialize();

    for (let attempt = 0; attempt < 2; attempt++) {
      let failed: ApiError | null = null;
      try {
        await session.submit(TASK, editor);
      } catch (error) {
        failed = error as ApiError;
      }
      expect(failed).not.toBeNull();
      expect(failed!.status).toBe(500);
      expect(failed!.code).toBe("internal");
      // mask intact locally: draft saved, layers untouched, still dirty
      expect(drafts.load(TASK.task_id)).toEqual(payload);
      expect(editor.serialize()).toEqual(payload);
      expect(editor.dirty).toBe(true);
    }

    const entry = await session.submit(TASK, editor);
    expect(entry.version_no).toBe(1);
    expect(server.history).toHaveLength(1);
    expect(server.history[0]).toEqual(payload);
    expect(editor.dirty).toBe(false);
    expect(drafts.load(TASK.task_id)).toBeNull();
  });

  it("refuses concurrent submits for one task", async () => {
    const server = flakyServer(0);
    let release: (value: Response) => void;
    const gate = new Promise<Response>((resolve) => { release = resolve; });
    const gatedFetch = async (input: string, init?: RequestInit) => {
      if ((init?.method ?? "GET") === "POST" && input.includes("/segmentations")) {
        await gate;
      }
      return server.fetchFn(input, init);
    };
    const drafts = new DraftStore(new MemoryStorage());
    const session = new TaskSession(
      new ApiClient("http://test", "token", gatedFetch), drafts, CLASSES);
    const editor = new Editor(16, 12, CLASSES);
    editor.drawStroke([{ x: 3, y: 3 }]);

    const first = session.submit(TASK, editor);
    await expect(session.submit(TASK, editor)).rejects.toThrow("in flight");
    release!(new Response(null));
    await first;
    expect(server.history).toHaveLength(1);
  });

  it("refuses to submit a clean editor", async () => {
    const server = flakyServer(0);
    const { session } = newSession(server);
    const editor = new Editor(16, 12, CLASSES);
    await expect(session.submit(TASK, editor)).rejects.toThrow("nothing to submit");
  });

  it("skip clears the draft", async () => {
    const server = flakyServer(0);
    const { session, drafts } = newSession(server);
    const editor = new Editor(16, 12, CLASSES);
    editor.drawStroke([{ x: 2, y: 2 }]);
    session.saveDraft(TASK, editor);
    const updated = await session.skip(TASK, "blurred", 2.5);
    expect(updated.state).toBe("skipped");
    expect(drafts.load(TASK.task_id)).toBeNull();
  });
});

describe("png size probe", () => {
  it("reads IHDR dimensions", async () => {
    const probe = await decodePngSize(fakePng(1444, 1444).buffer as ArrayBuffer);
    expect(probe).toEqual({ width: 1444, height: 1444 });
  });

  it("rejects non-png bytes", async () => {
    await expect(decodePngSize(new Uint8Array(30).buffer as ArrayBuffer))
      .rejects.toThrow("not a PNG");
  });
});

describe("draft round-trip through parse", () => {
  it("serialize/parse preserves layers exactly", () => {
    const editor = new Editor(20, 10, CLASSES);
    editor.setActiveClass("venule");
    editor.brushRadius = 3;
    editor.drawStroke([{ x: 5, y: 5 }, { x: 15, y: 5 }]);
    const parsed = parseMask(editor.serialize());
    expect(parsed.layers.get("venule")).toEqual(editor.layers.get("venule"));
    expect(parsed.layers.get("arteriole")).toEqual(editor.layers.get("arteriole"));
  });
});
