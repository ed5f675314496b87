import { afterEach, beforeEach, vi } from "vitest";
import { Controller } from "../src/main.js";
import {
  installFixtureServer,
  settle,
  type FixtureServer,
} from "./fixtureServer.js";

export interface Harness {
  server: FixtureServer;
  root: HTMLElement;
  controller: Controller;
}

const cleanups: (() => void)[] = [];

/** Boot a controller against the fixture server inside a fresh root. */
export async function bootDashboard(audit = "picanet"): Promise<Harness> {
  const server = installFixtureServer();
  const root = document.createElement("div");
  document.body.appendChild(root);
  const controller = new Controller(root, audit);
  await controller.init();
  await settle();
  cleanups.push(() => server.restore());
  return { server, root, controller };
}

// jsdom turns a download anchor's click into a navigation attempt and
// logs "Not implemented"; file delivery is covered by asserting on the
// export response instead.
beforeEach(() => {
  vi.spyOn(HTMLAnchorElement.prototype, "click")
    .mockImplementation(() => undefined);
});

afterEach(() => {
  for (const undo of cleanups.splice(0)) undo();
  vi.restoreAllMocks();
  document.body.replaceChildren();
  window.localStorage.clear();
});

export function card(root: HTMLElement, metric: string): HTMLElement {
  const node = root.querySelector<HTMLElement>(
    `article[data-metric="${metric}"]`);
  if (!node) throw new Error(`card ${metric} not rendered`);
  return node;
}

export function texts(
  scope: ParentNode, selector: string): string[] {
  return [...scope.querySelectorAll(selector)]
    .map((n) => n.textContent ?? "");
}

/** Labels of a tab strip, stripped of the close markers. */
export function tabLabels(scope: ParentNode, strip: string): string[] {
  return [...scope.querySelectorAll(`${strip} .tab .tab-label`)]
    .map((n) => n.textContent ?? "");
}

export function activeTabLabel(
  scope: ParentNode, strip: string): string | null {
  return scope.querySelector(`${strip} .tab.active .tab-label`)
    ?.textContent ?? null;
}

export function dblclick(node: Element): void {
  node.dispatchEvent(new MouseEvent("dblclick", { bubbles: true }));
}

export function click(node: Element): void {
  node.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

export function hover(node: Element): void {
  node.dispatchEvent(new Event("mouseenter"));
}

export function unhover(node: Element): void {
  node.dispatchEvent(new Event("mouseleave"));
}

/** Pick an option in an add-tab select and fire its change event. */
export function pickOption(select: HTMLSelectElement, value: string): void {
  select.value = value;
  select.dispatchEvent(new Event("change", { bubbles: true }));
}

export { settle };
