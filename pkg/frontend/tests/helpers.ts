// FakeApi replays responses recorded from the real service
// (tests/fixtures/running_example.json) and logs every call.

import fixture from "./fixtures/running_example.json";
import type { ApiClient } from "../src/api.js";
import type {
  BindingMap,
  ExecuteResponse,
  GenerateResponse,
  VersionSummary,
} from "../src/types.js";

export interface RecordedCall {
  method: string;
  versionId?: string;
  treeId?: string;
  bindings?: BindingMap;
}

export class FakeApi implements ApiClient {
  calls: RecordedCall[] = [];
  private generated = 0;

  async generate(): Promise<GenerateResponse> {
    this.calls.push({ method: "generate" });
    this.generated += 1;
    return (this.generated === 1 ? fixture.v1 : fixture.v2) as GenerateResponse;
  }

  async execute(
    versionId: string,
    treeId: string,
    bindings: BindingMap,
  ): Promise<ExecuteResponse> {
    this.calls.push({ method: "execute", versionId, treeId, bindings });
    if (versionId === "V2") {
      return fixture.executeV2 as ExecuteResponse;
    }
    const rootSelection = bindings[fixture.rootId];
    if (rootSelection === 1) {
      return fixture.executeQ2 as ExecuteResponse;
    }
    return fixture.executeDefault as ExecuteResponse;
  }

  async exportSql(versionId: string): Promise<string> {
    this.calls.push({ method: "export", versionId });
    return (fixture.exportQ2 as { sql: string }).sql;
  }

  async versions(): Promise<VersionSummary[]> {
    return [];
  }

  async datasets(): Promise<Record<string, unknown>> {
    return {};
  }

  executesSince(mark: number): RecordedCall[] {
    return this.calls.slice(mark).filter((c) => c.method === "execute");
  }
}

export { fixture };

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
