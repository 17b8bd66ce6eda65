// Thin client over the HTTP service. Everything the UI knows about SQL
// comes back from these calls; the UI itself never assembles SQL text.

import type {
  BindingMap,
  ExecuteResponse,
  GenerateResponse,
  VersionSummary,
} from "./types.js";

export interface ApiClient {
  generate(
    queries: string[],
    dataset: string,
    screen: { w: number; h: number },
    seed?: number,
  ): Promise<GenerateResponse>;
  execute(
    versionId: string,
    treeId: string,
    bindings: BindingMap,
    signal?: AbortSignal,
  ): Promise<ExecuteResponse>;
  exportSql(versionId: string): Promise<string>;
  versions(): Promise<VersionSummary[]>;
  datasets(): Promise<Record<string, unknown>>;
}

export class HttpApi implements ApiClient {
  constructor(private baseUrl: string = "") {}

  private async post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
    if (!response.ok) {
      const detail = await response.json().catch(() => ({ message: response.statusText }));
      throw new Error(`${path}: ${(detail as { message?: string }).message ?? response.status}`);
    }
    return (await response.json()) as T;
  }

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.baseUrl + path);
    if (!response.ok) {
      throw new Error(`${path}: ${response.status}`);
    }
    return (await response.json()) as T;
  }

  generate(
    queries: string[],
    dataset: string,
    screen: { w: number; h: number },
    seed = 0,
  ): Promise<GenerateResponse> {
    return this.post("/generate", { queries, dataset, screen, seed });
  }

  execute(
    versionId: string,
    treeId: string,
    bindings: BindingMap,
    signal?: AbortSignal,
  ): Promise<ExecuteResponse> {
    return this.post(
      "/execute",
      { version_id: versionId, tree_id: treeId, bindings },
      signal,
    );
  }

  async exportSql(versionId: string): Promise<string> {
    const body = await this.post<{ sql: string }>("/export", { version_id: versionId });
    return body.sql;
  }

  versions(): Promise<VersionSummary[]> {
    return this.get("/versions");
  }

  datasets(): Promise<Record<string, unknown>> {
    return this.get("/datasets");
  }
}
