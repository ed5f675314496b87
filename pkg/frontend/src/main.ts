/** Wires the state machine, the API client and the card DOM together.
 * One dashboard request renders the grid; everything else is fetched
 * lazily on expansion or tab changes. */

import {
  fetchAudits,
  fetchCard,
  fetchDashboard,
  fetchTab,
  postBrush,
  postExport,
  postLog,
  type CardPayload,
  type DashboardPayload,
  type SelectionBody,
  type Timeframe,
} from "./api.js";
import {
  renderErrorBanner,
  renderGrid,
  type CardHandlers,
  type CardRenderData,
} from "./cards.js";
import {
  composeSelection,
  DashboardState,
  storageOrderStore,
  type LayoutMode,
} from "./state.js";

function sessionId(): string {
  try {
    return crypto.randomUUID();
  } catch {
    return `s-${Date.now()}-${Math.floor(Math.random() * 1e6)}`;
  }
}

function schemaOk(doc: DashboardPayload): boolean {
  return Array.isArray(doc.cards)
    && typeof doc.dictionary === "object" && doc.dictionary !== null
    && doc.cards.every((c) => typeof c.metric === "string"
      && c.main != null && Array.isArray(c.main.series));
}

export class Controller {
  state!: DashboardState;
  payloads = new Map<string, CardPayload>();
  expandedLoaded = new Set<string>();
  tabCache = new Map<string, unknown>();
  dashboard!: DashboardPayload;
  timeframe: Timeframe | null = null;
  session = sessionId();
  private brushAborts = new Map<string, AbortController>();

  constructor(
    public root: HTMLElement,
    public audit: string,
  ) {}

  async init(tf: Timeframe | null = null): Promise<void> {
    let doc: DashboardPayload;
    try {
      doc = await fetchDashboard(this.audit, tf);
    } catch (err) {
      renderErrorBanner(this.root,
        `Could not load the ${this.audit} dashboard: ${String(err)}`);
      return;
    }
    if (!schemaOk(doc)) {
      renderErrorBanner(this.root,
        "The server payload did not match the expected dashboard shape.");
      return;
    }
    this.dashboard = doc;
    this.timeframe = { from: doc.from, to: doc.to };
    const metrics = doc.cards.map((c) => c.metric);
    let storage: Storage | null = null;
    try {
      storage = window.localStorage;
    } catch {
      storage = null;
    }
    this.state = new DashboardState(
      metrics, storageOrderStore(storage, `qualdash-order-${this.audit}`));
    for (const card of doc.cards) this.payloads.set(card.metric, card);
    this.render();
  }

  render(): void {
    renderGrid(this.root, this.state,
      (metric) => this.renderData(metric), this.handlers());
  }

  renderData(metric: string): CardRenderData {
    const payload = this.payloads.get(metric);
    if (!payload) throw new Error(`no payload for ${metric}`);
    const extras = new Map<string, unknown>();
    for (const [key, value] of this.tabCache) {
      const [m, view, field] = key.split("|");
      if (m === metric) extras.set(`${view}|${field}`, value);
    }
    return {
      payload,
      ui: this.state.card(metric),
      dictionary: this.dashboard.dictionary,
      extraTabs: extras,
    };
  }

  log(action: string, metric: string | null,
    detail: Record<string, unknown> = {}): void {
    postLog(this.session, action, metric, detail);
  }

  /** Toasts live on the body so a grid re-render cannot wipe them. */
  toast(message: string): void {
    const note = document.createElement("div");
    note.className = "toast";
    note.setAttribute("role", "status");
    note.textContent = message;
    document.body.appendChild(note);
    setTimeout(() => note.remove(), 4000);
  }

  async ensureExpandedPayload(metric: string): Promise<void> {
    if (this.expandedLoaded.has(metric)) return;
    const payload = await fetchCard(
      this.audit, metric, "expanded", this.timeframe);
    this.payloads.set(metric, payload);
    this.expandedLoaded.add(metric);
    if (payload.tabs) this.state.initTabs(metric, payload.tabs);
  }

  async expand(metric: string): Promise<void> {
    this.state.expand(metric);
    try {
      await this.ensureExpandedPayload(metric);
    } catch (err) {
      this.state.collapse(metric);
      this.render();
      this.toast(`Could not expand ${metric}: ${String(err)}`);
      return;
    }
    this.render();
    this.log("expand", metric, { state: "expanded" });
  }

  collapse(metric: string): void {
    this.state.collapse(metric);
    this.render();
    this.log("collapse", metric, { state: "entry" });
  }

  async setLayout(mode: LayoutMode): Promise<void> {
    this.state.setLayout(mode);
    if (mode === "1x1") {
      try {
        await Promise.all(this.state.order.map(
          (m) => this.ensureExpandedPayload(m)));
      } catch (err) {
        this.toast(`Could not expand every card: ${String(err)}`);
      }
    }
    this.render();
    this.log("layout_change", null, { layout: mode });
  }

  async brush(metric: string, next: SelectionBody): Promise<void> {
    const ui = this.state.card(metric);
    const previous = { brush: ui.brush, linked: ui.linked };
    const selection = composeSelection(ui.brush, next);
    this.brushAborts.get(metric)?.abort();
    const ac = new AbortController();
    this.brushAborts.set(metric, ac);
    try {
      const linked = await postBrush(
        this.audit, metric, selection, this.timeframe, ac.signal);
      if (ac.signal.aborted) return; // superseded while in flight
      this.state.setBrush(metric, selection, linked);
      this.render();
      this.log("brush", metric, {
        kind: next.bins ? "time" : "category",
        count: linked.cohort_size,
      });
    } catch (err) {
      if (ac.signal.aborted) return; // superseded: latest wins
      if (previous.brush !== null && previous.linked !== null) {
        this.state.setBrush(metric, previous.brush, previous.linked);
      } else {
        this.state.clearBrush(metric);
      }
      this.render();
      this.toast(`Selection failed: ${String(err)}`);
    }
  }

  clear(metric: string): void {
    this.state.clearBrush(metric);
    this.render();
    this.log("clear", metric, {});
  }

  /** Fetch-then-commit: the tab only joins the strip once its payload
   * is in hand (or already cached from an earlier add). */
  async addTab(
    metric: string,
    view: "categories" | "quantities",
    field: string,
  ): Promise<void> {
    const ui = this.state.card(metric);
    const tabs = view === "categories" ? ui.categories : ui.quantities;
    if (!tabs || tabs.fields.includes(field)) return;
    if (view === "quantities" && !this.state.canAddQuantityTab(metric))
      return;
    const key = `${metric}|${view}|${field}`;
    if (!this.tabCache.has(key)) {
      try {
        const payload = await fetchTab(
          this.audit, metric, view, { field }, this.timeframe);
        this.tabCache.set(key, payload);
      } catch (err) {
        this.toast(`Could not load ${field}: ${String(err)}`);
        return;
      }
    }
    if (!this.state.addTab(metric, view, field)) return;
    this.render();
    this.log("tab_change", metric, { view, tab: field });
  }

  removeTab(
    metric: string,
    view: "categories" | "quantities",
    field: string,
  ): void {
    if (!this.state.removeTab(metric, view, field)) return;
    this.render();
    this.log("tab_change", metric, { view, tab: field });
  }

  selectTab(
    metric: string,
    view: "categories" | "quantities",
    index: number,
  ): void {
    this.state.setActiveTab(metric, view, index);
    this.render();
    const tabs = view === "categories"
      ? this.state.card(metric).categories
      : this.state.card(metric).quantities;
    this.log("tab_change", metric,
      { view, tab: tabs?.fields[index] ?? "" });
  }

  async setTimesGranularity(
    metric: string, granularity: string): Promise<void> {
    this.state.setTimesGranularity(metric, granularity);
    this.render();
    this.log("tab_change", metric, { view: "times", granularity });
  }

  async exportSelection(metric: string): Promise<void> {
    const ui = this.state.card(metric);
    if (ui.brush === null) return;
    try {
      const { csv, count } = await postExport(
        this.audit, metric, ui.brush, this.timeframe);
      this.deliverFile(csv, `${this.audit}_${metric}_selection.csv`,
        "text/csv");
      this.log("export", metric, { count, format: "csv" });
    } catch (err) {
      this.toast(`Export failed: ${String(err)}`);
    }
  }

  downloadImage(metric: string): void {
    const card = this.root.querySelector(
      `article[data-metric="${metric}"]`);
    const svg = card?.querySelector("svg");
    if (!svg) return;
    this.deliverFile(svg.outerHTML, `${this.audit}_${metric}.svg`,
      "image/svg+xml");
    this.log("download", metric, { kind: "image", format: "svg" });
  }

  private deliverFile(
    content: string, filename: string, mime: string): void {
    try {
      const url = URL.createObjectURL(
        new Blob([content], { type: mime }));
      const a = document.createElement("a");
      a.href = url;
      a.download = filename;
      a.click();
      URL.revokeObjectURL(url);
    } catch {
      // a viewer without blob URLs just keeps the server response
    }
  }

  handlers(): CardHandlers {
    return {
      onToggleExpand: (m) => {
        if (this.state.card(m).expanded) this.collapse(m);
        else void this.expand(m);
      },
      onBrushTime: (m, binIso) => {
        const granularity = this.payloads.get(m)?.granularity ?? "month";
        void this.brush(m, { bins: [binIso], granularity });
      },
      onBrushCategory: (m, field, value) =>
        void this.brush(m, { category: { field, value } }),
      onClear: (m) => this.clear(m),
      onTabSelect: (m, view, index) => this.selectTab(m, view, index),
      onTabAdd: (m, view, field) => void this.addTab(m, view, field),
      onTabRemove: (m, view, field) => this.removeTab(m, view, field),
      onTimesGranularity: (m, g) => void this.setTimesGranularity(m, g),
      onExport: (m) => void this.exportSelection(m),
      onDownload: (m) => this.downloadImage(m),
      onReorder: (m, toIndex) => {
        this.state.moveCard(m, toIndex);
        this.render();
      },
      onLayout: (mode) => void this.setLayout(mode),
    };
  }
}

/** Start the dashboard in `root`. Without an explicit audit the first
 * configured one is used (one extra /audits request). */
export async function boot(
  root: HTMLElement,
  audit?: string,
): Promise<Controller | null> {
  let name = audit
    ?? new URLSearchParams(window.location.search).get("audit")
    ?? undefined;
  if (!name) {
    try {
      const audits = await fetchAudits();
      name = audits.audits[0]?.name;
    } catch (err) {
      renderErrorBanner(root, `Could not list audits: ${String(err)}`);
      return null;
    }
  }
  if (!name) {
    renderErrorBanner(root, "No audits are configured on this server.");
    return null;
  }
  const controller = new Controller(root, name);
  await controller.init();
  return controller;
}

const mount = document.getElementById("app");
if (mount) void boot(mount);
