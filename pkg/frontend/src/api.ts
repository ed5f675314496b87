/** Typed client for the dashboard server. Every number the UI shows
 * comes through here; nothing is aggregated locally. */

export interface SeriesPayload {
  measure: string;
  granularity: string;
  bins: string[];
  labels: string[];
  values: (number | null)[];
}

export interface EncodingGroup {
  kind: string;
  mark: "bar" | "line";
  axis: 0 | 1;
  measures: string[];
}

export interface EncodingPayload {
  chart: "stacked" | "grouped";
  groups: EncodingGroup[];
  palette: Record<string, number>;
}

export interface QualityField {
  missing: number;
  invalid: number;
  valid: number;
  total: number;
}

export interface QualityPayload {
  fields: Record<string, QualityField>;
  metric_total: number;
  summary: string;
}

export interface DistributionEntry {
  value: unknown;
  label: string;
  count: number;
  share: number;
}

export interface DistributionPayload {
  field: string;
  total: number;
  entries: DistributionEntry[];
}

export interface CategoryTab {
  field: string;
  distribution: DistributionPayload;
}

export interface QuantityTab {
  field: string;
  aggregate: string;
  palette: number;
  series: SeriesPayload;
}

export interface TimesGranularity {
  granularity: string;
  measures: Record<string, SeriesPayload[]>;
}

export interface TimesTabs {
  default: string;
  tspan: number;
  granularities: TimesGranularity[];
}

export interface CardTabs {
  categories: CategoryTab[];
  quantities: QuantityTab[];
  times: TimesTabs;
}

export interface EventPayload {
  name: string;
  date: string;
  id: unknown;
  desc: string;
}

export interface SelectionCounts {
  selected: number;
  total: number;
}

export interface CardPayload {
  metric: string;
  state: "entry" | "expanded";
  description: string;
  ylabel: string | null;
  legend: string[] | null;
  granularity: string;
  event: EventPayload | null;
  main: {
    series: SeriesPayload[];
    encoding: EncodingPayload;
    quality: QualityPayload;
  };
  selection_info: Record<string, SelectionCounts>;
  tabs?: CardTabs;
}

export interface DictionaryEntry {
  type: string;
  description: string;
}

export interface DashboardPayload {
  audit: string;
  from: string;
  to: string;
  xfield: string;
  cards: CardPayload[];
  dictionary: Record<string, DictionaryEntry>;
}

export interface AuditsPayload {
  audits: {
    name: string;
    metrics: string[];
    years: number[];
    xfield: string;
  }[];
}

/** Matches the server's selection body: time bins, a category slice,
 * or both composed. */
export interface SelectionBody {
  bins?: string[];
  granularity?: string;
  category?: { field: string; value: unknown };
}

export interface LinkedUpdatePayload {
  selection: Record<string, unknown>;
  cohort_size: number;
  selection_info: Record<string, SelectionCounts>;
  highlight: boolean[] | null;
  distributions: { field: string; distribution: DistributionPayload }[];
  overlay: { field: string; series: SeriesPayload } | null;
}

export interface Timeframe {
  from: string;
  to: string;
}

function tfQuery(tf: Timeframe | null): string {
  if (!tf) return "";
  return `from=${encodeURIComponent(tf.from)}&to=${encodeURIComponent(tf.to)}`;
}

async function getJson<T>(url: string): Promise<T> {
  const r = await fetch(url);
  if (!r.ok) throw new Error(`${url}: ${r.status}`);
  return (await r.json()) as T;
}

export function fetchAudits(): Promise<AuditsPayload> {
  return getJson("/audits");
}

export function fetchDashboard(
  audit: string,
  tf: Timeframe | null,
): Promise<DashboardPayload> {
  const q = tfQuery(tf);
  return getJson(`/dashboard/${audit}${q ? "?" + q : ""}`);
}

export function fetchCard(
  audit: string,
  metric: string,
  state: "entry" | "expanded",
  tf: Timeframe | null,
): Promise<CardPayload> {
  const q = tfQuery(tf);
  return getJson(
    `/card/${audit}/${metric}?state=${state}${q ? "&" + q : ""}`,
  );
}

export type TabPayload =
  | { field: string; distribution: DistributionPayload }
  | { field: string; aggregate: string; series: SeriesPayload }
  | { granularity: string; measures: Record<string, SeriesPayload[]>; tspan: number };

export function fetchTab(
  audit: string,
  metric: string,
  view: "categories" | "quantities" | "times",
  params: Record<string, string>,
  tf: Timeframe | null,
): Promise<TabPayload> {
  const search = new URLSearchParams({ view, ...params });
  if (tf) {
    search.set("from", tf.from);
    search.set("to", tf.to);
  }
  return getJson(`/card/${audit}/${metric}/tab?${search.toString()}`);
}

export async function postBrush(
  audit: string,
  metric: string,
  selection: SelectionBody,
  tf: Timeframe | null,
  signal?: AbortSignal,
): Promise<LinkedUpdatePayload> {
  const q = tfQuery(tf);
  const r = await fetch(`/card/${audit}/${metric}/brush${q ? "?" + q : ""}`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(selection),
    signal,
  });
  if (!r.ok) throw new Error(`brush failed: ${r.status}`);
  return (await r.json()) as LinkedUpdatePayload;
}

export async function postExport(
  audit: string,
  metric: string,
  selection: SelectionBody,
  tf: Timeframe | null,
): Promise<{ csv: string; count: number }> {
  const q = tfQuery(tf);
  const r = await fetch(
    `/card/${audit}/${metric}/export${q ? "?" + q : ""}`,
    {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(selection),
    },
  );
  if (!r.ok) throw new Error(`export failed: ${r.status}`);
  const csv = await r.text();
  const count = Number(r.headers.get("X-Selection-Count") ?? "0");
  return { csv, count };
}

/** Fire-and-forget usage logging; a logging failure must never be
 * visible in the dashboard. */
export function postLog(
  session: string,
  action: string,
  metric: string | null,
  detail: Record<string, unknown>,
): void {
  const entry: Record<string, unknown> = { session, action, detail };
  if (metric !== null) entry.metric = metric;
  try {
    void fetch("/logs", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(entry),
    }).catch(() => undefined);
  } catch {
    // ignore: logging is best-effort
  }
}
