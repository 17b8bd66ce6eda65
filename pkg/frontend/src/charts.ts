// Minimal in-repo chart layer: bar, line, scatter as inline SVG plus an
// HTML table fallback. Owning the hit-testing keeps interaction behavior
// deterministic for the DOM tests.

import type { ExecuteResponse, VisJson } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const MARGIN = { left: 42, right: 10, top: 10, bottom: 26 };

export interface ChartHandlers {
  onClick?: (value: number | string) => void;
  onBrush?: (lo: number, hi: number) => void;
  /** Pan by a fraction of the view, or zoom by a factor around the center. */
  onPanZoom?: (action: { dxFrac: number; dyFrac: number; scale: number }) => void;
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    el.setAttribute(key, String(value));
  }
  return el;
}

function extent(values: number[]): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (!isFinite(lo) || !isFinite(hi)) {
    lo = 0;
    hi = 1;
  }
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

export function renderChart(
  vis: VisJson,
  result: ExecuteResponse | undefined,
  handlers: ChartHandlers = {},
): HTMLElement {
  const container = document.createElement("div");
  container.className = "chart";
  container.dataset.vis = vis.id;
  container.dataset.chart = vis.chart;

  const title = document.createElement("div");
  title.className = "chart-title";
  title.textContent = result?.sql ?? "";
  container.appendChild(title);

  if (!result) {
    const empty = document.createElement("div");
    empty.className = "chart-empty";
    empty.textContent = "loading…";
    container.appendChild(empty);
    return container;
  }

  if (vis.chart === "table") {
    container.appendChild(renderTable(result));
    return container;
  }

  const width = vis.width;
  const height = vis.height;
  const svg = svgEl("svg", { width, height, viewBox: `0 0 ${width} ${height}` });
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const xIdx = vis.encodings["x"] ?? 0;
  const yIdx = vis.encodings["y"] ?? 1;

  const axes = svgEl("g", { class: "axes" });
  axes.appendChild(
    svgEl("line", {
      x1: MARGIN.left, y1: MARGIN.top + plotH, x2: MARGIN.left + plotW, y2: MARGIN.top + plotH,
      stroke: "#888",
    }),
  );
  axes.appendChild(
    svgEl("line", {
      x1: MARGIN.left, y1: MARGIN.top, x2: MARGIN.left, y2: MARGIN.top + plotH, stroke: "#888",
    }),
  );
  svg.appendChild(axes);

  const label = (text: string, x: number, y: number, anchor = "middle") => {
    const t = svgEl("text", { x, y, "text-anchor": anchor, class: "axis-label" });
    t.textContent = text;
    svg.appendChild(t);
  };
  label(result.columns[xIdx]?.name ?? "", MARGIN.left + plotW / 2, height - 4);
  label(result.columns[yIdx]?.name ?? "", 12, MARGIN.top + 8, "start");

  if (vis.chart === "bar") {
    const ys = result.rows.map((r) => Number(r[yIdx]));
    const [, yHi] = extent([0, ...ys]);
    const n = Math.max(result.rows.length, 1);
    const band = plotW / n;
    result.rows.forEach((row, i) => {
      const value = Number(row[yIdx]);
      const barH = (value / yHi) * plotH;
      const rect = svgEl("rect", {
        x: MARGIN.left + i * band + band * 0.1,
        y: MARGIN.top + plotH - barH,
        width: band * 0.8,
        height: Math.max(barH, 0),
        class: "bar",
      });
      rect.dataset.value = String(row[xIdx]);
      if (handlers.onClick) {
        rect.classList.add("clickable");
        rect.addEventListener("click", () => handlers.onClick!(row[xIdx]));
      }
      svg.appendChild(rect);
      const tick = svgEl("text", {
        x: MARGIN.left + i * band + band / 2,
        y: MARGIN.top + plotH + 14,
        "text-anchor": "middle",
        class: "tick",
      });
      tick.textContent = String(row[xIdx]);
      svg.appendChild(tick);
    });
    label(String(yHi), MARGIN.left - 4, MARGIN.top + 10, "end");
  } else {
    const xs = result.rows.map((r) => Number(r[xIdx]));
    const ys = result.rows.map((r) => Number(r[yIdx]));
    const [xLo, xHi] = extent(xs);
    const [yLo, yHi] = extent(ys);
    const sx = (v: number) => MARGIN.left + ((v - xLo) / (xHi - xLo)) * plotW;
    const sy = (v: number) => MARGIN.top + plotH - ((v - yLo) / (yHi - yLo)) * plotH;
    if (vis.chart === "line") {
      const ordered = result.rows
        .map((r) => [Number(r[xIdx]), Number(r[yIdx])] as [number, number])
        .sort((a, b) => a[0] - b[0]);
      const d = ordered
        .map(([x, y], i) => `${i === 0 ? "M" : "L"}${sx(x)},${sy(y)}`)
        .join(" ");
      svg.appendChild(svgEl("path", { d, class: "line", fill: "none" }));
    } else {
      result.rows.forEach((row) => {
        const dot = svgEl("circle", {
          cx: sx(Number(row[xIdx])),
          cy: sy(Number(row[yIdx])),
          r: 3,
          class: "dot",
        });
        dot.dataset.x = String(row[xIdx]);
        dot.dataset.y = String(row[yIdx]);
        svg.appendChild(dot);
      });
    }
    label(String(xLo), MARGIN.left, height - 14, "start");
    label(String(xHi), MARGIN.left + plotW, height - 14, "end");
    label(String(yHi), MARGIN.left - 4, MARGIN.top + 10, "end");
    label(String(yLo), MARGIN.left - 4, MARGIN.top + plotH, "end");

    attachDragGestures(svg, plotW, plotH, handlers, xLo, xHi);
  }

  container.appendChild(svg as unknown as Node);
  if (handlers.onBrush && vis.chart === "bar") {
    attachDragGestures(svg, plotW, plotH, handlers, 0, 1);
  }
  return container;
}

function attachDragGestures(
  svg: SVGSVGElement,
  plotW: number,
  plotH: number,
  handlers: ChartHandlers,
  xLo: number,
  xHi: number,
): void {
  if (!handlers.onBrush && !handlers.onPanZoom) {
    return;
  }
  let dragStart: { x: number; y: number } | null = null;

  svg.addEventListener("mousedown", (event) => {
    dragStart = { x: event.offsetX, y: event.offsetY };
  });
  svg.addEventListener("mouseup", (event) => {
    if (!dragStart) {
      return;
    }
    const dx = event.offsetX - dragStart.x;
    const dy = event.offsetY - dragStart.y;
    if (handlers.onBrush) {
      const toData = (px: number) => xLo + ((px - MARGIN.left) / plotW) * (xHi - xLo);
      const [lo, hi] = [toData(Math.min(dragStart.x, event.offsetX)), toData(Math.max(dragStart.x, event.offsetX))];
      if (Math.abs(dx) > 2) {
        handlers.onBrush(lo, hi);
      }
    } else if (handlers.onPanZoom && (Math.abs(dx) > 2 || Math.abs(dy) > 2)) {
      handlers.onPanZoom({ dxFrac: -dx / plotW, dyFrac: dy / plotH, scale: 1 });
    }
    dragStart = null;
  });
  if (handlers.onPanZoom) {
    svg.addEventListener("wheel", (event) => {
      event.preventDefault();
      const scale = event.deltaY > 0 ? 1.25 : 0.8;
      handlers.onPanZoom!({ dxFrac: 0, dyFrac: 0, scale });
    });
  }
}

function renderTable(result: ExecuteResponse): HTMLElement {
  const table = document.createElement("table");
  table.className = "result-table";
  const head = document.createElement("tr");
  for (const col of result.columns) {
    const th = document.createElement("th");
    th.textContent = col.name;
    head.appendChild(th);
  }
  table.appendChild(head);
  for (const row of result.rows.slice(0, 50)) {
    const tr = document.createElement("tr");
    for (const cell of row) {
      const td = document.createElement("td");
      td.textContent = String(cell);
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  return table;
}
