// Wire types mirroring the service's interface-spec JSON (docs/interface-spec.md).

export type ChoiceSelection =
  | number
  | boolean
  | number[]
  | { value: number | string }
  | BindingMap[];

export interface BindingMap {
  [nodeId: string]: ChoiceSelection;
}

export interface ForestNode {
  id: string;
  kind: "static" | "any" | "opt" | "multi" | "subset";
  label: string;
  children: ForestNode[];
}

export interface ForestJson {
  trees: { id: string; root: ForestNode }[];
}

export interface VisJson {
  id: string;
  chart: "bar" | "line" | "scatter" | "table";
  encodings: Record<string, number>;
  tree: string;
  width: number;
  height: number;
}

export interface WidgetOption {
  label: string;
  index?: number;
  value?: boolean;
  binding?: BindingMap[];
}

export interface WidgetJson {
  id: string;
  type:
    | "button_list"
    | "radio_list"
    | "dropdown"
    | "slider"
    | "range_slider"
    | "toggle"
    | "checkbox_list";
  targets: string[];
  tree: string;
  options: WidgetOption[] | null;
  range: [number, number, number] | null;
  column: string | null;
  default: unknown;
  width: number;
  height: number;
}

export interface VisInteractionJson {
  id: string;
  event: "click" | "multi_click" | "brush_x" | "pan_zoom";
  source: string;
  targets: string[][];
  columns: number[];
  domains: (number | string)[][];
}

export type LayoutJson =
  | { leaf: string; width: number; height: number }
  | { dir: "h" | "v"; width: number; height: number; children: LayoutJson[] };

export interface SpecJson {
  version: number;
  forest: ForestJson;
  visualizations: VisJson[];
  widgets: WidgetJson[];
  visInteractions: VisInteractionJson[];
  layout: LayoutJson;
  defaults: Record<string, BindingMap>;
}

export interface ColumnJson {
  name: string;
  type: string;
}

export interface ExecuteResponse {
  columns: ColumnJson[];
  rows: (number | string)[][];
  sql: string;
}

export interface GenerateResponse {
  version_id: string;
  spec: SpecJson;
}

export interface VersionSummary {
  version_id: string;
  created_at: string;
  dataset: string;
}

export function isLeaf(node: LayoutJson): node is { leaf: string; width: number; height: number } {
  return (node as { leaf?: string }).leaf !== undefined;
}
