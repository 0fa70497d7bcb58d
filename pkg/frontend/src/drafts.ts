/** Draft persistence: unsubmitted masks survive reloads, keyed by task id. */

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const PREFIX = "crowdseg-draft-";

function toBase64(bytes: Uint8Array): string {
  let binary = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}

function fromBase64(value: string): Uint8Array {
  const binary = atob(value);
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) bytes[i] = binary.charCodeAt(i);
  return bytes;
}

export class DraftStore {
  constructor(private readonly storage: StorageLike) {}

  save(taskId: string, lseg: Uint8Array): void {
    this.storage.setItem(PREFIX + taskId, toBase64(lseg));
  }

  load(taskId: string): Uint8Array | null {
    const value = this.storage.getItem(PREFIX + taskId);
    return value === null ? null : fromBase64(value);
  }

  clear(taskId: string): void {
    this.storage.removeItem(PREFIX + taskId);
  }
}
