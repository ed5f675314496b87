/** DOM for QualCards: entry state shows the main chart, quality line
 * and controls; expanded state adds the three sub-views with their tab
 * strips. All text and numbers come straight from server payloads. */

import type {
  CardPayload,
  CategoryTab,
  DictionaryEntry,
  DistributionPayload,
  QuantityTab,
  SeriesPayload,
} from "./api.js";
import {
  renderMainChart,
  renderPie,
  renderQuantityBars,
  renderTimesLines,
} from "./charts.js";
import type { CardUI, DashboardState, LayoutMode } from "./state.js";
import { LAYOUT_MODES, MAX_QUANTITY_TABS } from "./state.js";

// palette indices 5-9 belong to quantity tabs
const QUANTITY_PALETTE_BASE = 5;

export interface CardHandlers {
  onToggleExpand(metric: string): void;
  onBrushTime(metric: string, binIso: string): void;
  onBrushCategory(metric: string, field: string, value: unknown): void;
  onClear(metric: string): void;
  onTabSelect(
    metric: string, view: "categories" | "quantities", index: number): void;
  onTabAdd(
    metric: string, view: "categories" | "quantities", field: string): void;
  onTabRemove(
    metric: string, view: "categories" | "quantities", field: string): void;
  onTimesGranularity(metric: string, granularity: string): void;
  onExport(metric: string): void;
  onDownload(metric: string): void;
  onReorder(metric: string, toIndex: number): void;
  onLayout(mode: LayoutMode): void;
}

export interface CardRenderData {
  payload: CardPayload;
  ui: CardUI;
  dictionary: Record<string, DictionaryEntry>;
  /** lazily fetched payloads for tabs beyond the config defaults,
   * keyed `${view}|${field}` */
  extraTabs: Map<string, unknown>;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function fieldTitle(
  dictionary: Record<string, DictionaryEntry>,
  field: string,
): string {
  return dictionary[field]?.description ?? field;
}

function tabStrip(
  data: CardRenderData,
  view: "categories" | "quantities",
  handlers: CardHandlers,
): HTMLElement {
  const { ui, dictionary } = data;
  const tabs = view === "categories" ? ui.categories : ui.quantities;
  const strip = el("div", `tab-strip tab-strip-${view}`);
  if (!tabs) return strip;
  tabs.fields.forEach((field, i) => {
    const tab = el("button", "tab" + (i === tabs.active ? " active" : ""));
    tab.type = "button";
    tab.dataset.field = field;
    tab.title = fieldTitle(dictionary, field);
    tab.appendChild(el("span", "tab-label", field));
    tab.addEventListener("click", () =>
      handlers.onTabSelect(ui.metric, view, i));
    if (tabs.fields.length > 1) {
      const close = el("span", "tab-close", "×");
      close.title = `remove ${field}`;
      close.addEventListener("click", (ev) => {
        ev.stopPropagation();
        handlers.onTabRemove(ui.metric, view, field);
      });
      tab.appendChild(close);
    }
    strip.appendChild(tab);
  });

  const wantType = view === "categories"
    ? ["nominal", "ordinal", "boolean"]
    : ["quantitative"];
  const candidates = Object.entries(dictionary)
    .filter(([name, entry]) =>
      wantType.includes(entry.type) && !tabs.fields.includes(name))
    .map(([name]) => name);
  const blocked = view === "quantities"
    && tabs.fields.length >= MAX_QUANTITY_TABS;
  const add = el("select", "add-tab");
  const placeholder = el("option", "", "+ add");
  placeholder.value = "";
  add.appendChild(placeholder);
  for (const name of candidates) {
    const opt = el("option", "", name);
    opt.value = name;
    opt.title = fieldTitle(dictionary, name);
    add.appendChild(opt);
  }
  if (blocked) {
    add.disabled = true;
    add.title = `a card holds at most ${MAX_QUANTITY_TABS} quantity tabs`;
  } else if (candidates.length === 0) {
    add.disabled = true;
    add.title = "no further fields of this type in the dictionary";
  } else {
    add.title = `add a ${view} tab`;
  }
  add.addEventListener("change", () => {
    if (add.value) handlers.onTabAdd(ui.metric, view, add.value);
    add.value = "";
  });
  strip.appendChild(add);
  return strip;
}

function activeCategory(data: CardRenderData): CategoryTab | null {
  const tabs = data.ui.categories;
  const payloadTabs = data.payload.tabs;
  if (!tabs || tabs.fields.length === 0) return null;
  const field = tabs.fields[tabs.active];
  const fromPayload = payloadTabs?.categories.find(
    (t) => t.field === field);
  if (fromPayload) return fromPayload;
  const extra = data.extraTabs.get(`categories|${field}`);
  return (extra as CategoryTab | undefined) ?? null;
}

function activeQuantity(data: CardRenderData): QuantityTab | null {
  const tabs = data.ui.quantities;
  const payloadTabs = data.payload.tabs;
  if (!tabs || tabs.fields.length === 0) return null;
  const field = tabs.fields[tabs.active];
  const fromPayload = payloadTabs?.quantities.find(
    (t) => t.field === field);
  if (fromPayload) return fromPayload;
  const extra = data.extraTabs.get(`quantities|${field}`) as
    { field: string; aggregate: string; series: SeriesPayload } | undefined;
  if (!extra) return null;
  return {
    ...extra,
    palette: QUANTITY_PALETTE_BASE + tabs.active,
  };
}

/** The linked update re-proportions category pies; fall back to the
 * card-wide distribution when nothing is brushed. */
function categoryDistribution(
  data: CardRenderData,
  tab: CategoryTab,
): DistributionPayload {
  const linked = data.ui.linked;
  const swap = linked?.distributions.find((d) => d.field === tab.field);
  return swap ? swap.distribution : tab.distribution;
}

function selectionStrip(data: CardRenderData): HTMLElement | null {
  const linked = data.ui.linked;
  if (!linked) return null;
  const strip = el("div", "selection-strip");
  strip.appendChild(el("span", "selection-cohort",
    `${linked.cohort_size} selected records`));
  for (const [name, info] of Object.entries(linked.selection_info)) {
    strip.appendChild(el("span", "selection-measure",
      `${name}: ${info.selected} of ${info.total}`));
  }
  return strip;
}

function subViews(
  data: CardRenderData,
  handlers: CardHandlers,
): HTMLElement[] {
  const { payload, ui } = data;
  const metric = ui.metric;
  const views: HTMLElement[] = [];

  const catSection = el("section", "subview subview-categories");
  catSection.appendChild(el("h4", "subview-title", "Categories"));
  catSection.appendChild(tabStrip(data, "categories", handlers));
  const catChart = el("div", "subview-chart");
  const cat = activeCategory(data);
  if (cat) {
    renderPie(catChart, categoryDistribution(data, cat), {
      onSlice: (entry) =>
        handlers.onBrushCategory(metric, cat.field, entry.value),
    });
  } else {
    catChart.appendChild(el("p", "placeholder", "loading tab"));
  }
  catSection.appendChild(catChart);
  views.push(catSection);

  const qSection = el("section", "subview subview-quantities");
  qSection.appendChild(el("h4", "subview-title", "Quantities"));
  qSection.appendChild(tabStrip(data, "quantities", handlers));
  const qChart = el("div", "subview-chart");
  const quantity = activeQuantity(data);
  if (quantity) {
    const overlay = ui.linked?.overlay
      && ui.linked.overlay.field === quantity.field
      ? ui.linked.overlay.series
      : null;
    renderQuantityBars(qChart, quantity.series, quantity.palette, overlay);
    qChart.appendChild(el("p", "quantity-caption",
      `${quantity.aggregate} of ${quantity.field}`));
  } else {
    qChart.appendChild(el("p", "placeholder", "loading tab"));
  }
  qSection.appendChild(qChart);
  views.push(qSection);

  const tSection = el("section", "subview subview-times");
  tSection.appendChild(el("h4", "subview-title", "Times"));
  const times = payload.tabs?.times;
  if (times) {
    const granularity = ui.timesGranularity ?? times.default;
    const strip = el("div", "tab-strip tab-strip-times");
    for (const g of times.granularities) {
      const tab = el("button",
        "tab" + (g.granularity === granularity ? " active" : ""));
      tab.type = "button";
      tab.textContent = g.granularity;
      tab.addEventListener("click", () =>
        handlers.onTimesGranularity(metric, g.granularity));
      strip.appendChild(tab);
    }
    tSection.appendChild(strip);
    const active = times.granularities.find(
      (g) => g.granularity === granularity) ?? times.granularities[0];
    const tChart = el("div", "subview-chart");
    if (active) {
      renderTimesLines(tChart, active.measures,
        payload.main.encoding.palette);
    }
    tSection.appendChild(tChart);
    tSection.appendChild(el("p", "times-caption",
      `${times.tspan} year context`));
  }
  views.push(tSection);

  return views;
}

export function renderCard(
  data: CardRenderData,
  handlers: CardHandlers,
): HTMLElement {
  const { payload, ui } = data;
  const metric = ui.metric;
  const card = el("article",
    "qualcard" + (ui.expanded ? " expanded" : ""));
  card.dataset.metric = metric;

  // the grey border doubles as the drag handle and expand target
  const border = el("div", "card-border");
  border.draggable = true;
  border.title = "drag to reposition; double-click to expand";
  border.addEventListener("dblclick", () =>
    handlers.onToggleExpand(metric));
  border.addEventListener("dragstart", (ev) => {
    ev.dataTransfer?.setData("text/plain", metric);
  });
  card.appendChild(border);

  const header = el("header", "card-header");
  const title = el("h3", "card-title", metric);
  title.title = payload.description;
  header.appendChild(title);
  if (payload.ylabel)
    header.appendChild(el("span", "card-ylabel", payload.ylabel));

  const controls = el("div", "card-controls");
  const expandBtn = el("button", "btn expand-btn",
    ui.expanded ? "collapse" : "expand");
  expandBtn.type = "button";
  expandBtn.addEventListener("click", () =>
    handlers.onToggleExpand(metric));
  controls.appendChild(expandBtn);

  const clearBtn = el("button", "btn clear-btn", "clear");
  clearBtn.type = "button";
  clearBtn.disabled = ui.brush === null;
  clearBtn.addEventListener("click", () => handlers.onClear(metric));
  controls.appendChild(clearBtn);

  const downloadBtn = el("button", "btn download-btn", "download");
  downloadBtn.type = "button";
  downloadBtn.title = "download the card's charts as an image";
  downloadBtn.addEventListener("click", () =>
    handlers.onDownload(metric));
  controls.appendChild(downloadBtn);

  const exportBtn = el("button", "btn export-btn", "export");
  exportBtn.type = "button";
  exportBtn.disabled = ui.brush === null;
  exportBtn.title = ui.brush === null
    ? "select records first: brush a time range or a pie slice"
    : "export the selected records as CSV";
  exportBtn.addEventListener("click", () => handlers.onExport(metric));
  controls.appendChild(exportBtn);
  header.appendChild(controls);
  card.appendChild(header);

  const descLine = payload.description.split("\n")[0] ?? "";
  const desc = el("p", "card-desc", descLine);
  desc.title = payload.description;
  card.appendChild(desc);

  const main = el("div", "main-chart");
  renderMainChart(main, payload.main.series, payload.main.encoding, {
    highlight: ui.linked?.highlight ?? null,
    onBinClick: ui.expanded
      ? (b) => {
          const iso = payload.main.series[0]?.bins[b];
          if (iso) handlers.onBrushTime(metric, iso);
        }
      : undefined,
  });
  card.appendChild(main);

  card.appendChild(el("p", "quality-line",
    payload.main.quality.summary));

  const strip = selectionStrip(data);
  if (strip) card.appendChild(strip);

  if (ui.expanded) {
    for (const section of subViews(data, handlers))
      card.appendChild(section);
  }
  return card;
}

export function renderLayoutBar(
  active: LayoutMode,
  handlers: CardHandlers,
): HTMLElement {
  const bar = el("div", "layout-bar");
  bar.appendChild(el("span", "layout-label", "layout"));
  for (const mode of LAYOUT_MODES) {
    const btn = el("button",
      "btn layout-btn" + (mode === active ? " active" : ""), mode);
    btn.type = "button";
    btn.dataset.mode = mode;
    btn.addEventListener("click", () => handlers.onLayout(mode));
    bar.appendChild(btn);
  }
  return bar;
}

export function renderGrid(
  root: HTMLElement,
  state: DashboardState,
  cardData: (metric: string) => CardRenderData,
  handlers: CardHandlers,
): void {
  root.replaceChildren();
  root.appendChild(renderLayoutBar(state.layout, handlers));
  const grid = el("div", `card-grid layout-${state.layout}`);
  if (state.order.length === 0) {
    grid.appendChild(el("p", "empty-state",
      "No metrics configured for this audit."));
  }
  state.order.forEach((metric, index) => {
    const card = renderCard(cardData(metric), handlers);
    card.addEventListener("dragover", (ev) => ev.preventDefault());
    card.addEventListener("drop", (ev) => {
      ev.preventDefault();
      const moved = ev.dataTransfer?.getData("text/plain");
      if (moved && moved !== metric) handlers.onReorder(moved, index);
    });
    grid.appendChild(card);
  });
  root.appendChild(grid);
}

export function renderErrorBanner(root: HTMLElement, message: string): void {
  root.replaceChildren();
  const banner = el("div", "error-banner", message);
  banner.setAttribute("role", "alert");
  root.appendChild(banner);
}
