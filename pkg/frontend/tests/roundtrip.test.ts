// Renderer round trip against recorded service responses: clicking the Q2
// option issues exactly one /execute, the chart repaints with Q2's rows,
// export yields the canonical Q2 SQL, and version tabs restore state.

import { beforeEach, describe, expect, it } from "vitest";

import { App } from "../src/app.js";
import { FakeApi, fixture, flush } from "./helpers.js";

describe("round trip", () => {
  let api: FakeApi;
  let app: App;
  let root: HTMLElement;

  beforeEach(async () => {
    document.body.innerHTML = '<div id="root"></div>';
    root = document.getElementById("root")!;
    api = new FakeApi();
    app = new App(root, api);
    await app.generate();
    await flush();
  });

  it("renders the chart above the option buttons", () => {
    const chart = root.querySelector(".chart[data-chart=bar]");
    expect(chart).not.toBeNull();
    const buttons = root.querySelectorAll(".widget-button_list button");
    expect(buttons.length).toBe(3);
    expect(buttons[0].textContent).toContain("SELECT p");
  });

  it("clicking the Q2 option issues exactly one execute and repaints", async () => {
    const mark = api.calls.length;
    const buttons = root.querySelectorAll<HTMLButtonElement>(".widget-button_list button");
    buttons[1].click();
    await flush();

    const executes = api.executesSince(mark);
    expect(executes.length).toBe(1);
    expect(executes[0].treeId).toBe(fixture.treeId);
    expect(executes[0].bindings![fixture.rootId]).toBe(1);

    // Q2 rows hand-evaluated over the demo table: p=1 twice, p=2 once
    const bars = root.querySelectorAll<SVGRectElement>("rect.bar");
    expect(bars.length).toBe(2);
    const title = root.querySelector(".chart-title")!;
    expect(title.textContent).toBe("SELECT p, count(*) FROM T WHERE b = 2 GROUP BY p");
  });

  it("export appends the canonical SQL of the current selection", async () => {
    const buttons = root.querySelectorAll<HTMLButtonElement>(".widget-button_list button");
    buttons[1].click();
    await flush();
    await app.exportCurrent();
    const entries = root.querySelectorAll(".export-entry pre");
    expect(entries.length).toBe(1);
    expect(entries[0].textContent).toBe(
      "SELECT p, count(*) FROM T WHERE b = 2 GROUP BY p",
    );
  });

  it("version tabs restore prior state without re-executing", async () => {
    const buttons = root.querySelectorAll<HTMLButtonElement>(".widget-button_list button");
    buttons[1].click();
    await flush();

    await app.generate(); // V2
    await flush();
    expect(app.activeVersion).toBe("V2");

    const mark = api.calls.length;
    const tabs = root.querySelectorAll<HTMLButtonElement>(".version-tabs .tab");
    expect(tabs.length).toBe(2);
    tabs[0].click();
    await flush();

    expect(app.activeVersion).toBe("V1");
    expect(api.executesSince(mark).length).toBe(0); // retained result reused
    const active = root.querySelector<HTMLButtonElement>(".widget-button_list button.active");
    expect(active?.dataset.option).toBe("1"); // Q2 still selected
    const title = root.querySelector(".chart-title")!;
    expect(title.textContent).toContain("WHERE b = 2");
  });

  it("shows the query-log snapshot verbatim", () => {
    const pre = root.querySelector(".query-log pre")!;
    expect(pre.textContent).toBe(fixture.queries.join("\n"));
    const details = root.querySelector<HTMLDetailsElement>("details.query-log")!;
    expect(details.open).toBe(false); // collapsed by default
  });
});
