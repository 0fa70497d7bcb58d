/** Typed client over the server's public endpoint table. */

export interface Task {
  task_id: string;
  image_id: string;
  annotator_id: string;
  state: string;
  updated_at: string;
  quality_grade_at_skip: number | null;
  skip_reason: string | null;
}

export interface QualityReport {
  grade: number;
  sharpness: number;
  contrast: number;
  exposure: number;
}

export interface VersionEntry {
  image_id: string;
  version_no: number;
  blob: { digest: string; size: number };
  annotator_id: string;
  created_at: string;
  kind: string;
  restored_from: number | null;
  review: string;
  reviewer_id: string | null;
  reviewed_at: string | null;
}

/** Server error, surfaced verbatim with its machine code. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly serverMessage: string,
  ) {
    super(`${code} (${status}): ${serverMessage}`);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private headers(extra?: Record<string, string>): Record<string, string> {
    return { Authorization: `Bearer ${this.token}`, ...extra };
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1${path}`, {
      ...init,
      headers: this.headers(init?.headers as Record<string, string>),
    });
    if (!response.ok) {
      let code = "internal";
      let message = response.statusText;
      try {
        const body = await response.json();
        code = body.code ?? code;
        message = body.message ?? message;
      } catch {
        // non-JSON error body; keep defaults
      }
      throw new ApiError(response.status, code, message);
    }
    return response;
  }

  async myTasks(): Promise<Task[]> {
    const response = await this.request("/tasks?mine=true");
    return (await response.json()).tasks;
  }

  async imageBytes(imageId: string): Promise<ArrayBuffer> {
    return (await this.request(`/images/${imageId}`)).arrayBuffer();
  }

  async enhancedBytes(imageId: string): Promise<ArrayBuffer> {
    return (await this.request(`/images/${imageId}/enhanced`)).arrayBuffer();
  }

  async presegmentation(imageId: string): Promise<Uint8Array> {
    const response = await this.request(`/images/${imageId}/presegmentation`);
    return new Uint8Array(await response.arrayBuffer());
  }

  async quality(imageId: string): Promise<QualityReport> {
    return (await this.request(`/images/${imageId}/quality`)).json();
  }

  async submit(imageId: string, lseg: Uint8Array): Promise<VersionEntry> {
    const body = lseg.buffer.slice(
      lseg.byteOffset, lseg.byteOffset + lseg.byteLength) as ArrayBuffer;
    const response = await this.request(`/images/${imageId}/segmentations`, {
      method: "POST",
      headers: { "Content-Type": "application/octet-stream" },
      body,
    });
    return response.json();
  }

  async skip(taskId: string, reason: string, qualityGrade?: number): Promise<Task> {
    const response = await this.request(`/tasks/${taskId}/skip`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ reason, quality_grade: qualityGrade ?? null }),
    });
    return response.json();
  }
}
