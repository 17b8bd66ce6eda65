// Structural validation of an incoming spec. A malformed spec must surface
// an error panel with the failing paths, never a blank page.

import type { SpecJson } from "./types.js";

export function validateSpec(spec: unknown): string[] {
  const problems: string[] = [];
  const s = spec as Partial<SpecJson> | null;
  if (!s || typeof s !== "object") {
    return ["spec: not an object"];
  }
  if (s.version !== 1) {
    problems.push(`version: expected 1, got ${String(s.version)}`);
  }
  if (!s.forest || !Array.isArray(s.forest.trees) || s.forest.trees.length === 0) {
    problems.push("forest.trees: missing or empty");
  }
  if (!Array.isArray(s.visualizations)) {
    problems.push("visualizations: missing");
  } else {
    s.visualizations.forEach((v, i) => {
      if (!v.id || !v.chart || !v.tree) {
        problems.push(`visualizations[${i}]: needs id, chart, tree`);
      }
    });
  }
  if (!Array.isArray(s.widgets)) {
    problems.push("widgets: missing");
  } else {
    s.widgets.forEach((w, i) => {
      if (!w.id || !w.type || !Array.isArray(w.targets) || w.targets.length === 0) {
        problems.push(`widgets[${i}]: needs id, type, targets`);
      }
      if (w.options == null && w.range == null) {
        problems.push(`widgets[${i}]: needs options or range`);
      }
    });
  }
  if (!Array.isArray(s.visInteractions)) {
    problems.push("visInteractions: missing");
  }
  if (!s.layout) {
    problems.push("layout: missing");
  } else if (problems.length === 0) {
    const leaves = collectLeaves(s.layout as SpecJson["layout"]);
    const components = new Set<string>([
      ...s.visualizations!.map((v) => v.id),
      ...s.widgets!.map((w) => w.id),
    ]);
    for (const leaf of leaves) {
      if (!components.has(leaf)) {
        problems.push(`layout: unknown component ${leaf}`);
      }
    }
    for (const component of components) {
      if (!leaves.includes(component)) {
        problems.push(`layout: component ${component} missing`);
      }
    }
  }
  if (!s.defaults || typeof s.defaults !== "object") {
    problems.push("defaults: missing");
  }
  return problems;
}

function collectLeaves(layout: SpecJson["layout"]): string[] {
  const out: string[] = [];
  const walk = (node: SpecJson["layout"]): void => {
    if ((node as { leaf?: string }).leaf !== undefined) {
      out.push((node as { leaf: string }).leaf);
      return;
    }
    for (const child of (node as { children: SpecJson["layout"][] }).children) {
      walk(child);
    }
  };
  walk(layout);
  return out;
}
