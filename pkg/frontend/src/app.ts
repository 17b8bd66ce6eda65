// Top-level application: generation form, version tabs, query-log panel,
// export log, and the live interface (charts + widgets) for the active
// version. Every interaction rebinds choice nodes and re-executes the
// affected trees through the service; the UI never builds SQL itself.

import { type ApiClient } from "./api.js";
import { renderChart, type ChartHandlers } from "./charts.js";
import { layoutToDom } from "./layout.js";
import { VersionState } from "./state.js";
import type {
  BindingMap,
  ChoiceSelection,
  ForestNode,
  SpecJson,
  VisInteractionJson,
} from "./types.js";
import { validateSpec } from "./validate.js";
import { CONTINUOUS_DEBOUNCE_MS, debounce, renderWidget, type SelectionChange } from "./widgets.js";

const DEFAULT_QUERIES = [
  "SELECT p, count(*) FROM T WHERE a = 1 GROUP BY p",
  "SELECT p, count(*) FROM T WHERE b = 2 GROUP BY p",
  "SELECT a, count(*) FROM T GROUP BY a",
].join("\n");

export class App {
  readonly versions = new Map<string, VersionState>();
  readonly snapshots = new Map<string, string[]>();
  /** interaction id -> live handler attached (checked by the DOM audit test) */
  readonly interactionHandlers = new Map<string, boolean>();
  activeVersion: string | null = null;

  private tabsEl!: HTMLElement;
  private logPanelEl!: HTMLDetailsElement;
  private exportLogEl!: HTMLElement;
  private interfaceEl!: HTMLElement;
  private queryInput!: HTMLTextAreaElement;
  private datasetInput!: HTMLInputElement;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
  ) {
    this.buildChrome();
  }

  private buildChrome(): void {
    this.root.innerHTML = "";
    const left = document.createElement("aside");
    left.className = "pane-left";
    left.innerHTML = `<h1>queryboard</h1>`;

    this.datasetInput = document.createElement("input");
    this.datasetInput.value = "demo";
    this.datasetInput.className = "dataset-input";
    left.appendChild(labelled("dataset", this.datasetInput));

    this.queryInput = document.createElement("textarea");
    this.queryInput.rows = 8;
    this.queryInput.value = DEFAULT_QUERIES;
    left.appendChild(labelled("query log", this.queryInput));

    const generate = document.createElement("button");
    generate.id = "generate";
    generate.textContent = "Generate interface";
    generate.addEventListener("click", () => void this.generate());
    left.appendChild(generate);

    const right = document.createElement("main");
    right.className = "pane-right";
    this.tabsEl = document.createElement("nav");
    this.tabsEl.className = "version-tabs";
    right.appendChild(this.tabsEl);

    this.logPanelEl = document.createElement("details");
    this.logPanelEl.className = "query-log";
    this.logPanelEl.innerHTML = "<summary>Query Log</summary><pre></pre>";
    right.appendChild(this.logPanelEl);

    const exportRow = document.createElement("div");
    exportRow.className = "export-row";
    const exportBtn = document.createElement("button");
    exportBtn.id = "export";
    exportBtn.textContent = "Export current query";
    exportBtn.addEventListener("click", () => void this.exportCurrent());
    exportRow.appendChild(exportBtn);
    right.appendChild(exportRow);

    this.exportLogEl = document.createElement("div");
    this.exportLogEl.className = "export-log";
    right.appendChild(this.exportLogEl);

    this.interfaceEl = document.createElement("div");
    this.interfaceEl.className = "interface";
    right.appendChild(this.interfaceEl);

    this.root.appendChild(left);
    this.root.appendChild(right);
  }

  async generate(): Promise<void> {
    const queries = this.queryInput.value
      .split("\n")
      .map((line) => line.trim())
      .filter((line) => line.length > 0 && !line.startsWith("--"));
    try {
      const response = await this.api.generate(queries, this.datasetInput.value, {
        w: Math.max(this.interfaceEl.clientWidth, 640),
        h: Math.max(this.interfaceEl.clientHeight, 480),
      });
      this.addVersion(response.version_id, response.spec, queries);
    } catch (error) {
      this.toast(`generation failed: ${(error as Error).message}`);
    }
  }

  addVersion(versionId: string, spec: SpecJson, snapshot: string[]): void {
    const problems = validateSpec(spec);
    if (problems.length > 0) {
      this.renderErrorPanel(problems);
      return;
    }
    this.versions.set(versionId, new VersionState(versionId, spec));
    this.snapshots.set(versionId, snapshot);
    this.renderTabs();
    this.openVersion(versionId);
  }

  openVersion(versionId: string): void {
    const state = this.versions.get(versionId);
    if (!state) {
      return;
    }
    this.activeVersion = versionId;
    this.renderTabs();
    const pre = this.logPanelEl.querySelector("pre")!;
    pre.textContent = (this.snapshots.get(versionId) ?? []).join("\n");
    this.renderInterface(state);
    for (const [treeId, runtime] of state.trees) {
      if (!runtime.result) {
        void this.executeTree(state, treeId);
      }
    }
  }

  private renderTabs(): void {
    this.tabsEl.innerHTML = "";
    for (const versionId of this.versions.keys()) {
      const tab = document.createElement("button");
      tab.className = "tab" + (versionId === this.activeVersion ? " tab-active" : "");
      tab.dataset.version = versionId;
      tab.textContent = versionId;
      tab.addEventListener("click", () => this.openVersion(versionId));
      this.tabsEl.appendChild(tab);
    }
  }

  private renderErrorPanel(problems: string[]): void {
    this.interfaceEl.innerHTML = "";
    const panel = document.createElement("div");
    panel.className = "error-panel";
    panel.innerHTML = "<h2>Invalid interface spec</h2>";
    const list = document.createElement("ul");
    for (const problem of problems) {
      const item = document.createElement("li");
      item.textContent = problem;
      list.appendChild(item);
    }
    panel.appendChild(list);
    this.interfaceEl.appendChild(panel);
  }

  renderInterface(state: VersionState): void {
    this.interactionHandlers.clear();
    this.interfaceEl.innerHTML = "";
    const spec = state.spec;
    const componentFor = (id: string): HTMLElement => {
      const vis = spec.visualizations.find((v) => v.id === id);
      if (vis) {
        const runtime = state.trees.get(vis.tree)!;
        const handlers = this.chartHandlers(state, vis.id);
        const chart = renderChart(vis, runtime.result, handlers);
        if (runtime.error) {
          const err = document.createElement("div");
          err.className = "chart-error";
          err.textContent = runtime.error;
          chart.appendChild(err);
        }
        return chart;
      }
      const widget = spec.widgets.find((w) => w.id === id)!;
      const binding = state.trees.get(widget.tree)!.binding;
      return renderWidget(widget, binding, (changes) => {
        void this.applyChanges(state, changes);
      });
    };
    this.interfaceEl.appendChild(layoutToDom(spec.layout, componentFor));
  }

  /** Handlers for in-chart interactions whose source is this chart. */
  private chartHandlers(state: VersionState, visId: string): ChartHandlers {
    const handlers: ChartHandlers = {};
    const mine = state.spec.visInteractions.filter((ix) => ix.source === visId);
    for (const ix of mine) {
      if (ix.event === "click") {
        handlers.onClick = (value) => {
          void this.applyChanges(state, this.clickSelection(state, ix, value));
        };
      } else if (ix.event === "multi_click") {
        handlers.onClick = (value) => {
          void this.applyChanges(state, this.multiClickSelection(state, ix, value));
        };
      } else if (ix.event === "brush_x") {
        const fire = debounce((lo: number, hi: number) => {
          const [loId, hiId] = ix.targets[0];
          void this.applyChanges(state, {
            [loId]: { value: round3(lo) },
            [hiId]: { value: round3(hi) },
          });
        }, CONTINUOUS_DEBOUNCE_MS);
        handlers.onBrush = fire;
      } else {
        const fire = debounce((action: { dxFrac: number; dyFrac: number; scale: number }) => {
          void this.applyChanges(state, this.panZoomSelection(state, ix, action));
        }, CONTINUOUS_DEBOUNCE_MS);
        handlers.onPanZoom = fire;
      }
      this.interactionHandlers.set(ix.id, true);
    }
    return handlers;
  }

  private clickSelection(
    state: VersionState,
    ix: VisInteractionJson,
    value: number | string,
  ): SelectionChange {
    const nodeId = ix.targets[0][0];
    const domain = nodeDomain(state.spec, nodeId);
    const index = domain.indexOf(value);
    return { [nodeId]: index >= 0 ? index : { value } };
  }

  private multiClickSelection(
    state: VersionState,
    ix: VisInteractionJson,
    value: number | string,
  ): SelectionChange {
    const nodeId = ix.targets[0][0];
    const domain = nodeDomain(state.spec, nodeId);
    const index = domain.indexOf(value);
    if (index < 0) {
      return {};
    }
    const treeId = state.treeOf(nodeId)!;
    const current = (state.trees.get(treeId)!.binding[nodeId] as number[] | undefined) ?? [];
    const next = current.includes(index)
      ? current.filter((i) => i !== index)
      : [...current, index];
    return next.length > 0 ? { [nodeId]: next } : {};
  }

  private panZoomSelection(
    state: VersionState,
    ix: VisInteractionJson,
    action: { dxFrac: number; dyFrac: number; scale: number },
  ): SelectionChange {
    const changes: SelectionChange = {};
    ix.targets.forEach((pair, axis) => {
      const [loId, hiId] = pair;
      const lo = currentRangeValue(state, loId);
      const hi = currentRangeValue(state, hiId);
      const span = hi - lo;
      const shift = (axis === 0 ? action.dxFrac : action.dyFrac) * span;
      const center = (lo + hi) / 2 + shift;
      const half = (span / 2) * action.scale;
      changes[loId] = { value: round3(center - half) };
      changes[hiId] = { value: round3(center + half) };
    });
    return changes;
  }

  /** Rebind changed nodes, then execute every tree containing one. */
  async applyChanges(state: VersionState, changes: SelectionChange): Promise<void> {
    if (Object.keys(changes).length === 0) {
      return;
    }
    const previous: Record<string, BindingMap> = {};
    for (const nodeId of Object.keys(changes)) {
      const treeId = state.treeOf(nodeId);
      if (treeId && !(treeId in previous)) {
        previous[treeId] = state.snapshotBinding(treeId);
      }
    }
    const affected = state.updateSelections(changes);
    await Promise.all(
      affected.map((treeId) => this.executeTree(state, treeId, previous[treeId])),
    );
  }

  async executeTree(
    state: VersionState,
    treeId: string,
    previous?: BindingMap,
  ): Promise<void> {
    const { token, controller } = state.beginExecute(treeId);
    try {
      const result = await this.api.execute(
        state.versionId,
        treeId,
        state.snapshotBinding(treeId),
        controller.signal,
      );
      if (state.commitResult(treeId, token, result) && state === this.active()) {
        this.renderInterface(state);
      }
    } catch (error) {
      if ((error as DOMException).name === "AbortError") {
        return;
      }
      const applied = state.rollback(
        treeId,
        token,
        previous ?? state.snapshotBinding(treeId),
        (error as Error).message,
      );
      if (applied && state === this.active()) {
        this.renderInterface(state);
      }
    }
  }

  async exportCurrent(): Promise<void> {
    if (!this.activeVersion) {
      return;
    }
    try {
      const sql = await this.api.exportSql(this.activeVersion);
      const entry = document.createElement("div");
      entry.className = "export-entry";
      const pre = document.createElement("pre");
      pre.textContent = sql;
      const copy = document.createElement("button");
      copy.textContent = "copy";
      copy.addEventListener("click", () => {
        void navigator.clipboard?.writeText(sql);
      });
      entry.appendChild(pre);
      entry.appendChild(copy);
      this.exportLogEl.appendChild(entry);
    } catch (error) {
      this.toast(`export failed: ${(error as Error).message}`);
    }
  }

  active(): VersionState | null {
    return this.activeVersion ? (this.versions.get(this.activeVersion) ?? null) : null;
  }

  toast(message: string): void {
    const el = document.createElement("div");
    el.className = "toast";
    el.textContent = message;
    this.root.appendChild(el);
    setTimeout(() => el.remove(), 4000);
  }
}

function labelled(text: string, control: HTMLElement): HTMLElement {
  const wrap = document.createElement("label");
  wrap.className = "field";
  const span = document.createElement("span");
  span.textContent = text;
  wrap.appendChild(span);
  wrap.appendChild(control);
  return wrap;
}

/** Literal child values of a choice node, parsed from its forest labels. */
export function nodeDomain(spec: SpecJson, nodeId: string): (number | string)[] {
  for (const tree of spec.forest.trees) {
    const found = findNode(tree.root, nodeId);
    if (found) {
      return found.children.map(literalValue).filter((v) => v !== undefined) as (
        | number
        | string
      )[];
    }
  }
  return [];
}

function findNode(node: ForestNode, nodeId: string): ForestNode | null {
  if (node.id === nodeId) {
    return node;
  }
  for (const child of node.children) {
    const found = findNode(child, nodeId);
    if (found) {
      return found;
    }
  }
  return null;
}

function literalValue(node: ForestNode): number | string | undefined {
  if (!node.label.startsWith("lit:")) {
    return undefined;
  }
  const [, kind, ...rest] = node.label.split(":");
  const raw = rest.join(":");
  return kind === "num" ? Number(raw) : raw;
}

function currentRangeValue(state: VersionState, nodeId: string): number {
  const treeId = state.treeOf(nodeId)!;
  const selection = state.trees.get(treeId)!.binding[nodeId] as ChoiceSelection | undefined;
  if (typeof selection === "object" && selection !== null && "value" in selection) {
    return Number((selection as { value: number | string }).value);
  }
  const domain = nodeDomain(state.spec, nodeId);
  if (typeof selection === "number" && domain[selection] !== undefined) {
    return Number(domain[selection]);
  }
  return Number(domain[0] ?? 0);
}

function round3(value: number): number {
  return Math.round(value * 1000) / 1000;
}
