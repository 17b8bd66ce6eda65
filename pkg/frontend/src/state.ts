// Per-version runtime state: current bindings, last results, and the
// request sequencing that makes chart updates last-writer-wins per tree.

import type { BindingMap, ChoiceSelection, ExecuteResponse, SpecJson } from "./types.js";

export interface TreeRuntime {
  binding: BindingMap;
  seq: number; // last issued request token
  applied: number; // token of the result currently shown
  result?: ExecuteResponse;
  error?: string;
  controller?: AbortController;
}

export class VersionState {
  readonly trees = new Map<string, TreeRuntime>();
  private nodeToTree = new Map<string, string>();

  constructor(
    readonly versionId: string,
    readonly spec: SpecJson,
  ) {
    for (const tree of spec.forest.trees) {
      this.trees.set(tree.id, {
        binding: { ...(spec.defaults[tree.id] ?? {}) },
        seq: 0,
        applied: 0,
      });
      const walk = (node: (typeof tree)["root"]): void => {
        if (node.kind !== "static") {
          this.nodeToTree.set(node.id, tree.id);
        }
        node.children.forEach(walk);
      };
      walk(tree.root);
    }
  }

  treeOf(nodeId: string): string | undefined {
    return this.nodeToTree.get(nodeId);
  }

  /** Apply selection changes; returns the affected tree ids (deduplicated). */
  updateSelections(changes: Record<string, ChoiceSelection>): string[] {
    const affected: string[] = [];
    for (const [nodeId, selection] of Object.entries(changes)) {
      const treeId = this.nodeToTree.get(nodeId);
      if (treeId === undefined) {
        continue;
      }
      const runtime = this.trees.get(treeId)!;
      runtime.binding[nodeId] = selection;
      if (!affected.includes(treeId)) {
        affected.push(treeId);
      }
    }
    return affected;
  }

  snapshotBinding(treeId: string): BindingMap {
    return { ...this.trees.get(treeId)!.binding };
  }

  /** Issue token for a new execute; aborts any in-flight request for the tree. */
  beginExecute(treeId: string): { token: number; controller: AbortController } {
    const runtime = this.trees.get(treeId)!;
    runtime.controller?.abort();
    const controller = new AbortController();
    runtime.controller = controller;
    runtime.seq += 1;
    runtime.error = undefined;
    return { token: runtime.seq, controller };
  }

  /** Apply a response unless a newer request has been issued since. */
  commitResult(treeId: string, token: number, result: ExecuteResponse): boolean {
    const runtime = this.trees.get(treeId)!;
    if (token < runtime.seq || token <= runtime.applied) {
      return false; // stale
    }
    runtime.applied = token;
    runtime.result = result;
    runtime.controller = undefined;
    return true;
  }

  /** Record a failure and restore the previous binding for the tree. */
  rollback(treeId: string, token: number, previous: BindingMap, message: string): boolean {
    const runtime = this.trees.get(treeId)!;
    if (token < runtime.seq) {
      return false; // a newer request supersedes this failure
    }
    runtime.binding = { ...previous };
    runtime.error = message;
    runtime.controller = undefined;
    return true;
  }
}
