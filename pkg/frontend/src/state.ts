/** Dashboard UI state: grid layout, card order, per-card expansion,
 * sub-view tabs and the active brush. Pure data, no DOM. */

import type {
  CardTabs,
  LinkedUpdatePayload,
  SelectionBody,
} from "./api.js";

export type LayoutMode = "1x1" | "2x2" | "2x3";

export const LAYOUT_MODES: LayoutMode[] = ["1x1", "2x2", "2x3"];

// mirrors the server-side cap on quantity tabs
export const MAX_QUANTITY_TABS = 5;

export interface SubViewTabs {
  fields: string[];
  active: number;
}

export interface CardUI {
  metric: string;
  expanded: boolean;
  /** null until the expanded payload has been seen once */
  categories: SubViewTabs | null;
  quantities: SubViewTabs | null;
  timesGranularity: string | null;
  brush: SelectionBody | null;
  linked: LinkedUpdatePayload | null;
}

export interface OrderStore {
  load(): string[] | null;
  save(order: string[]): void;
}

export function storageOrderStore(
  storage: Storage | null,
  key: string,
): OrderStore {
  return {
    load() {
      try {
        const raw = storage?.getItem(key);
        if (!raw) return null;
        const parsed = JSON.parse(raw);
        return Array.isArray(parsed) ? parsed.map(String) : null;
      } catch {
        return null;
      }
    },
    save(order) {
      try {
        storage?.setItem(key, JSON.stringify(order));
      } catch {
        // persistence is a convenience, not a requirement
      }
    },
  };
}

function freshCard(metric: string): CardUI {
  return {
    metric,
    expanded: false,
    categories: null,
    quantities: null,
    timesGranularity: null,
    brush: null,
    linked: null,
  };
}

export class DashboardState {
  layout: LayoutMode = "2x2";
  order: string[];
  cards = new Map<string, CardUI>();

  constructor(
    metrics: string[],
    private store: OrderStore | null = null,
  ) {
    const saved = store?.load() ?? null;
    if (saved) {
      const known = saved.filter((m) => metrics.includes(m));
      const missing = metrics.filter((m) => !known.includes(m));
      this.order = [...known, ...missing];
    } else {
      this.order = [...metrics];
    }
    for (const m of metrics) this.cards.set(m, freshCard(m));
  }

  card(metric: string): CardUI {
    const c = this.cards.get(metric);
    if (!c) throw new Error(`unknown card ${metric}`);
    return c;
  }

  /** 1x1 expands every card; the multi-card grids show entry state. */
  setLayout(mode: LayoutMode): void {
    this.layout = mode;
    for (const c of this.cards.values()) {
      if (mode === "1x1") {
        c.expanded = true;
      } else if (c.expanded) {
        this.collapse(c.metric);
      }
    }
  }

  moveCard(metric: string, toIndex: number): void {
    const from = this.order.indexOf(metric);
    if (from < 0) return;
    const clamped = Math.max(0, Math.min(toIndex, this.order.length - 1));
    this.order.splice(from, 1);
    this.order.splice(clamped, 0, metric);
    this.store?.save(this.order);
  }

  expand(metric: string): void {
    this.card(metric).expanded = true;
  }

  collapse(metric: string): void {
    const c = this.card(metric);
    c.expanded = false;
    c.brush = null;
    c.linked = null;
  }

  /** Default tab strips come from the expanded payload, in config order. */
  initTabs(metric: string, tabs: CardTabs): void {
    const c = this.card(metric);
    if (c.categories === null) {
      c.categories = {
        fields: tabs.categories.map((t) => t.field),
        active: 0,
      };
    }
    if (c.quantities === null) {
      c.quantities = {
        fields: tabs.quantities.map((t) => t.field),
        active: 0,
      };
    }
    if (c.timesGranularity === null) {
      c.timesGranularity = tabs.times.default;
    }
  }

  canAddQuantityTab(metric: string): boolean {
    const tabs = this.card(metric).quantities;
    return tabs !== null && tabs.fields.length < MAX_QUANTITY_TABS;
  }

  /** Returns false when the tab was refused (limit or duplicate).
   * Adding is structural, so the brush is cleared. */
  addTab(
    metric: string,
    view: "categories" | "quantities",
    field: string,
  ): boolean {
    const c = this.card(metric);
    const tabs = view === "categories" ? c.categories : c.quantities;
    if (!tabs || tabs.fields.includes(field)) return false;
    if (view === "quantities" && !this.canAddQuantityTab(metric))
      return false;
    tabs.fields.push(field);
    tabs.active = tabs.fields.length - 1;
    this.clearBrush(metric);
    return true;
  }

  /** Removing the active tab activates the next one (or the new last). */
  removeTab(
    metric: string,
    view: "categories" | "quantities",
    field: string,
  ): boolean {
    const c = this.card(metric);
    const tabs = view === "categories" ? c.categories : c.quantities;
    if (!tabs) return false;
    const i = tabs.fields.indexOf(field);
    if (i < 0 || tabs.fields.length <= 1) return false;
    tabs.fields.splice(i, 1);
    if (tabs.active >= tabs.fields.length)
      tabs.active = tabs.fields.length - 1;
    this.clearBrush(metric);
    return true;
  }

  setActiveTab(
    metric: string,
    view: "categories" | "quantities",
    index: number,
  ): void {
    const c = this.card(metric);
    const tabs = view === "categories" ? c.categories : c.quantities;
    if (tabs && index >= 0 && index < tabs.fields.length)
      tabs.active = index;
  }

  setTimesGranularity(metric: string, granularity: string): void {
    this.card(metric).timesGranularity = granularity;
  }

  setBrush(
    metric: string,
    selection: SelectionBody,
    linked: LinkedUpdatePayload,
  ): void {
    const c = this.card(metric);
    c.brush = selection;
    c.linked = linked;
  }

  clearBrush(metric: string): void {
    const c = this.card(metric);
    c.brush = null;
    c.linked = null;
  }

  hasSelection(metric: string): boolean {
    return this.card(metric).brush !== null;
  }
}

/** Compose a new brush with the card's existing one: a time brush keeps
 * the category slice and vice versa. */
export function composeSelection(
  current: SelectionBody | null,
  next: SelectionBody,
): SelectionBody {
  const merged: SelectionBody = { ...(current ?? {}) };
  if (next.bins !== undefined) {
    merged.bins = next.bins;
    merged.granularity = next.granularity;
  }
  if (next.category !== undefined) merged.category = next.category;
  return merged;
}
