// Widget renderers. Each widget reports selection changes as a map of
// choice-node id -> new selection; the app layer turns that into executes.

import type { BindingMap, ChoiceSelection, WidgetJson } from "./types.js";

export type SelectionChange = Record<string, ChoiceSelection>;
export type ChangeHandler = (changes: SelectionChange) => void;

export const CONTINUOUS_DEBOUNCE_MS = 150;

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  ms: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) {
      clearTimeout(timer);
    }
    timer = setTimeout(() => fn(...args), ms);
  };
}

export function renderWidget(
  widget: WidgetJson,
  binding: BindingMap,
  onChange: ChangeHandler,
): HTMLElement {
  const container = document.createElement("div");
  container.className = `widget widget-${widget.type}`;
  container.dataset.widget = widget.id;
  if (widget.column) {
    const caption = document.createElement("div");
    caption.className = "widget-caption";
    caption.textContent = widget.column;
    container.appendChild(caption);
  }
  switch (widget.type) {
    case "button_list":
      renderButtons(widget, binding, onChange, container);
      break;
    case "radio_list":
      renderRadios(widget, binding, onChange, container);
      break;
    case "dropdown":
      renderDropdown(widget, binding, onChange, container);
      break;
    case "toggle":
      renderToggle(widget, binding, onChange, container);
      break;
    case "checkbox_list":
      renderCheckboxes(widget, binding, onChange, container);
      break;
    case "slider":
      renderSlider(widget, binding, onChange, container);
      break;
    case "range_slider":
      renderRangeSlider(widget, binding, onChange, container);
      break;
  }
  return container;
}

function selectionOf(widget: WidgetJson, binding: BindingMap): ChoiceSelection | undefined {
  return binding[widget.targets[0]];
}

function optionPayload(widget: WidgetJson, index: number): ChoiceSelection {
  const option = widget.options![index];
  if (option.binding !== undefined) {
    return option.binding;
  }
  if (option.value !== undefined) {
    return option.value;
  }
  return option.index ?? index;
}

function renderButtons(
  widget: WidgetJson,
  binding: BindingMap,
  onChange: ChangeHandler,
  container: HTMLElement,
): void {
  const current = selectionOf(widget, binding);
  widget.options!.forEach((option, i) => {
    const button = document.createElement("button");
    button.textContent = option.label;
    button.dataset.option = String(i);
    if (current === optionPayload(widget, i)) {
      button.classList.add("active");
    }
    button.addEventListener("click", () =>
      onChange({ [widget.targets[0]]: optionPayload(widget, i) }),
    );
    container.appendChild(button);
  });
}

function renderRadios(
  widget: WidgetJson,
  binding: BindingMap,
  onChange: ChangeHandler,
  container: HTMLElement,
): void {
  const current = selectionOf(widget, binding);
  widget.options!.forEach((option, i) => {
    const row = document.createElement("label");
    const input = document.createElement("input");
    input.type = "radio";
    input.name = widget.id;
    input.checked = current === optionPayload(widget, i);
    input.addEventListener("change", () =>
      onChange({ [widget.targets[0]]: optionPayload(widget, i) }),
    );
    row.appendChild(input);
    row.appendChild(document.createTextNode(option.label));
    container.appendChild(row);
  });
}

function renderDropdown(
  widget: WidgetJson,
  binding: BindingMap,
  onChange: ChangeHandler,
  container: HTMLElement,
): void {
  const current = selectionOf(widget, binding);
  const select = document.createElement("select");
  widget.options!.forEach((option, i) => {
    const el = document.createElement("option");
    el.value = String(i);
    el.textContent = option.label;
    el.selected = current === optionPayload(widget, i);
    select.appendChild(el);
  });
  select.addEventListener("change", () =>
    onChange({ [widget.targets[0]]: optionPayload(widget, Number(select.value)) }),
  );
  container.appendChild(select);
}

function renderToggle(
  widget: WidgetJson,
  binding: BindingMap,
  onChange: ChangeHandler,
  container: HTMLElement,
): void {
  const label = document.createElement("label");
  const input = document.createElement("input");
  input.type = "checkbox";
  input.checked = selectionOf(widget, binding) === true;
  input.addEventListener("change", () => onChange({ [widget.targets[0]]: input.checked }));
  label.appendChild(input);
  label.appendChild(document.createTextNode("enabled"));
  container.appendChild(label);
}

function renderCheckboxes(
  widget: WidgetJson,
  binding: BindingMap,
  onChange: ChangeHandler,
  container: HTMLElement,
): void {
  const current = new Set((selectionOf(widget, binding) as number[] | undefined) ?? []);
  const inputs: HTMLInputElement[] = [];
  widget.options!.forEach((option, i) => {
    const row = document.createElement("label");
    const input = document.createElement("input");
    input.type = "checkbox";
    input.checked = current.has(option.index ?? i);
    input.dataset.index = String(option.index ?? i);
    input.addEventListener("change", () => {
      const picked = inputs
        .filter((el) => el.checked)
        .map((el) => Number(el.dataset.index));
      if (picked.length === 0) {
        input.checked = true; // selections must stay non-empty
        return;
      }
      onChange({ [widget.targets[0]]: picked });
    });
    inputs.push(input);
    row.appendChild(input);
    row.appendChild(document.createTextNode(option.label));
    container.appendChild(row);
  });
}

function renderSlider(
  widget: WidgetJson,
  binding: BindingMap,
  onChange: ChangeHandler,
  container: HTMLElement,
): void {
  const [min, max, step] = widget.range!;
  const input = document.createElement("input");
  input.type = "range";
  input.min = String(min);
  input.max = String(max);
  input.step = String(step);
  const current = selectionOf(widget, binding);
  input.value = String(valueOfSelection(current, widget, min));
  const readout = document.createElement("span");
  readout.className = "slider-value";
  readout.textContent = input.value;
  const fire = debounce(
    () => onChange({ [widget.targets[0]]: { value: Number(input.value) } }),
    CONTINUOUS_DEBOUNCE_MS,
  );
  input.addEventListener("input", () => {
    readout.textContent = input.value;
    fire();
  });
  container.appendChild(input);
  container.appendChild(readout);
}

function renderRangeSlider(
  widget: WidgetJson,
  binding: BindingMap,
  onChange: ChangeHandler,
  container: HTMLElement,
): void {
  const [min, max, step] = widget.range!;
  const [loTarget, hiTarget] = widget.targets;
  const mk = (value: number): HTMLInputElement => {
    const input = document.createElement("input");
    input.type = "range";
    input.min = String(min);
    input.max = String(max);
    input.step = String(step);
    input.value = String(value);
    return input;
  };
  const lo = mk(valueOfSelection(binding[loTarget], widget, min));
  const hi = mk(valueOfSelection(binding[hiTarget], widget, max));
  const readout = document.createElement("span");
  readout.className = "slider-value";
  const update = () => {
    readout.textContent = `${lo.value} – ${hi.value}`;
  };
  update();
  const fire = debounce(() => {
    onChange({
      [loTarget]: { value: Number(lo.value) },
      [hiTarget]: { value: Number(hi.value) },
    });
  }, CONTINUOUS_DEBOUNCE_MS);
  for (const input of [lo, hi]) {
    input.addEventListener("input", () => {
      update();
      fire();
    });
    container.appendChild(input);
  }
  container.appendChild(readout);
}

function valueOfSelection(
  selection: ChoiceSelection | undefined,
  widget: WidgetJson,
  fallback: number,
): number {
  if (typeof selection === "object" && selection !== null && "value" in selection) {
    return Number((selection as { value: number | string }).value);
  }
  if (typeof selection === "number" && widget.options) {
    const label = widget.options[selection]?.label;
    const parsed = Number(label);
    if (!Number.isNaN(parsed)) {
      return parsed;
    }
  }
  return fallback;
}
