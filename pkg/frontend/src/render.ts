// DOM rendering over the controller. The whole view re-renders on every
// state change; at top-5..25 list sizes that is simpler and fast enough.

import type { ShopController } from "./app.js";
import type { FacetWire, RankingEntryWire, RankingWire } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderErrorBanner(controller: ShopController): HTMLElement {
  const banner = el("div", "error-banner");
  banner.append(el("p", undefined, "Could not load the shop's facet schema."));
  const retry = el("button", "retry", "Retry");
  retry.addEventListener("click", () => void controller.retry());
  banner.append(retry);
  return banner;
}

function renderFacet(facet: FacetWire, controller: ShopController): HTMLElement {
  const panel = controller.panel!;
  const box = el("fieldset", "facet");
  box.dataset.facetId = facet.facet_id;
  const legend = el("legend", undefined, facet.unit ? `${facet.label} (${facet.unit})` : facet.label);
  if (panel.isDirty(facet.facet_id)) legend.classList.add("dirty");
  box.append(legend);

  const anyLabel = el("label", "bin any");
  const anyInput = el("input");
  anyInput.type = "checkbox";
  anyInput.checked = panel.isAny(facet.facet_id);
  anyInput.dataset.role = "any";
  anyInput.addEventListener("change", () => void controller.chooseAny(facet.facet_id));
  anyLabel.append(anyInput, document.createTextNode(" any"));
  box.append(anyLabel);

  for (const bin of facet.values) {
    const label = el("label", "bin");
    const input = el("input");
    input.type = "checkbox";
    input.dataset.binId = bin.bin_id;
    input.checked = panel.bins(facet.facet_id).includes(bin.bin_id);
    input.addEventListener("change", () => void controller.toggleBin(facet.facet_id, bin.bin_id));
    label.append(input, document.createTextNode(` ${bin.label}`));
    box.append(label);
  }
  return box;
}

export function renderSidebar(controller: ShopController): HTMLElement {
  const aside = el("aside", "sidebar");
  for (const facet of controller.schema!.facets) {
    aside.append(renderFacet(facet, controller));
  }
  const submit = el("button", "submit", controller.submit.pending ? "Retry submit" : "Submit my needs");
  submit.dataset.role = "submit";
  submit.disabled = controller.submit.submitting;
  submit.addEventListener("click", () => void controller.submitSession());
  aside.append(submit);
  if (controller.submit.pending) {
    aside.append(el("p", "pending-note", "Submission queued; will retry."));
  }
  if (controller.submit.lastRecordId) {
    aside.append(el("p", "submitted-note", `Thanks! Recorded as ${controller.submit.lastRecordId}.`));
  }
  return aside;
}

function renderBreakdown(entry: RankingEntryWire): HTMLElement {
  const table = el("table", "breakdown");
  const head = el("tr");
  for (const column of ["facet", "bin", "w_f", "w_fv", "w_f x w_fv"]) {
    head.append(el("th", undefined, column));
  }
  table.append(head);
  for (const row of entry.breakdown ?? []) {
    const tr = el("tr", row.no_bin ? "no-bin" : undefined);
    tr.append(el("td", undefined, row.facet_id));
    tr.append(el("td", undefined, row.bin_id ?? "(no bin)"));
    tr.append(el("td", undefined, row.facet_weight.toFixed(3)));
    tr.append(el("td", undefined, row.value_weight.toFixed(3)));
    tr.append(el("td", undefined, row.contribution.toFixed(4)));
    table.append(tr);
  }
  return table;
}

function renderCard(
  entry: RankingEntryWire,
  controller: ShopController,
  expanded: Set<string>,
): HTMLElement {
  const card = el("article", "card");
  card.dataset.productId = entry.product_id;
  const header = el("header");
  header.append(el("span", "rank", `#${entry.rank}`));
  header.append(el("h3", "title", controller.titleFor(entry.product_id)));
  header.append(el("span", "score", entry.score.toFixed(4)));
  card.append(header);
  if (entry.breakdown) {
    const toggle = el("button", "expand", expanded.has(entry.product_id) ? "Hide score detail" : "Why this rank?");
    toggle.addEventListener("click", () => {
      if (expanded.has(entry.product_id)) expanded.delete(entry.product_id);
      else expanded.add(entry.product_id);
      card.dispatchEvent(new CustomEvent("rerender", { bubbles: true }));
    });
    card.append(toggle);
    if (expanded.has(entry.product_id)) {
      card.append(renderBreakdown(entry));
    }
  }
  return card;
}

export function renderResults(
  controller: ShopController,
  expanded: Set<string>,
): HTMLElement {
  const section = el("section", "results");
  if (controller.stale) {
    section.append(el("div", "stale-badge", "showing last good list (backend unreachable)"));
  }
  const ranking = controller.ranking;
  if (!ranking) {
    section.append(el("p", "empty", "No ranking yet."));
    return section;
  }
  // render strictly in response order; the client never re-sorts
  for (const entry of ranking.entries) {
    section.append(renderCard(entry, controller, expanded));
  }
  return section;
}

export function renderToolbar(controller: ShopController): HTMLElement {
  const bar = el("nav", "toolbar");

  const kSelect = el("select", "k-select");
  for (const k of [5, 10, 25]) {
    const option = el("option", undefined, `top ${k}`);
    option.value = String(k);
    option.selected = controller.view.k === k;
    kSelect.append(option);
  }
  kSelect.addEventListener("change", () => void controller.setK(Number(kSelect.value)));
  bar.append(kSelect);

  const adminLabel = el("label", "admin-toggle");
  const adminInput = el("input");
  adminInput.type = "checkbox";
  adminInput.checked = controller.view.adminView;
  adminInput.addEventListener("change", () => controller.setAdminView(adminInput.checked));
  adminLabel.append(adminInput, document.createTextNode(" admin view"));
  bar.append(adminLabel);

  if (controller.view.adminView) {
    const methodSelect = el("select", "method-select");
    for (const method of ["undr", "rating_baseline"] as const) {
      const option = el("option", undefined, method);
      option.value = method;
      option.selected = controller.view.method === method;
      methodSelect.append(option);
    }
    methodSelect.addEventListener("change", () =>
      void controller.setMethod(methodSelect.value as "undr" | "rating_baseline"),
    );
    bar.append(methodSelect);

    const cohortSelect = el("select", "cohort-select");
    for (const cohort of ["all", "basic", "advanced"] as const) {
      const option = el("option", undefined, cohort);
      option.value = cohort;
      option.selected = controller.view.cohort === cohort;
      cohortSelect.append(option);
    }
    cohortSelect.addEventListener("change", () =>
      void controller.setCohort(cohortSelect.value as "all" | "basic" | "advanced"),
    );
    bar.append(cohortSelect);

    const recompute = el("button", "recompute", "Recompute weights");
    recompute.addEventListener("click", () => void controller.triggerRecompute());
    bar.append(recompute);
  }
  return bar;
}

export function renderFooter(ranking: RankingWire | null): HTMLElement {
  const footer = el("footer", "provenance");
  if (ranking?.provenance) {
    footer.textContent =
      `weights ${ranking.provenance.fingerprint} | ${ranking.provenance.denominator_mode}` +
      ` | cohort ${ranking.provenance.cohort_id}`;
  } else if (ranking) {
    footer.textContent = `${ranking.method} (no weight table involved)`;
  }
  return footer;
}

export function mount(root: HTMLElement, controller: ShopController): void {
  const expanded = new Set<string>();

  const draw = () => {
    root.replaceChildren();
    if (controller.phase === "schema_error") {
      root.append(renderErrorBanner(controller));
      return;
    }
    if (controller.phase === "loading" || !controller.schema) {
      root.append(el("p", "loading", "Loading shop..."));
      return;
    }
    root.append(renderToolbar(controller));
    const layout = el("div", "layout");
    layout.append(renderSidebar(controller));
    layout.append(renderResults(controller, expanded));
    root.append(layout);
    root.append(renderFooter(controller.ranking));
  };

  controller.onChange(draw);
  root.addEventListener("rerender", draw);
  draw();
}
