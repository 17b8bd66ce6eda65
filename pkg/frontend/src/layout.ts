// Realizes the spec's layout tree as nested flex regions. Estimated sizes
// are minimums; regions grow to share the available space.

import { isLeaf, type LayoutJson } from "./types.js";

export function layoutToDom(
  layout: LayoutJson,
  componentFor: (id: string) => HTMLElement,
): HTMLElement {
  if (isLeaf(layout)) {
    const slot = document.createElement("div");
    slot.className = "layout-leaf";
    slot.style.minWidth = `${layout.width}px`;
    slot.style.minHeight = `${layout.height}px`;
    slot.appendChild(componentFor(layout.leaf));
    return slot;
  }
  const region = document.createElement("div");
  region.className = `layout-${layout.dir}`;
  region.style.display = "flex";
  region.style.flexDirection = layout.dir === "h" ? "row" : "column";
  region.style.gap = "8px";
  for (const child of layout.children) {
    region.appendChild(layoutToDom(child, componentFor));
  }
  return region;
}
