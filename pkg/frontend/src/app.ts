// Shop controller: session state, live ranking view and submission flow.
// Deliberately DOM-free so the headless end-to-end test can drive exactly
// the logic the browser runs; render.ts subscribes to this controller.

import type { ShopApi } from "./api.js";
import { FacetPanel, newSessionId } from "./state.js";
import type {
  CohortId,
  FinalizeResponseWire,
  ProductWire,
  RankingMethod,
  RankingWire,
  SchemaWire,
} from "./types.js";

export interface ViewOptions {
  method: RankingMethod;
  cohort: CohortId;
  k: number;
  adminView: boolean;
}

export type Phase = "loading" | "schema_error" | "ready";

export interface SubmitState {
  pending: boolean; // a submit failed and waits for retry
  submitting: boolean;
  lastRecordId: string | null;
}

/** Standardized result-card title: model, brand, screen size, operating
 * system, RAM size, storage size, processor information, battery life. */
export function composeTitle(product: ProductWire): string {
  const a = product.attributes;
  const parts = [
    product.title,
    String(a["brand"] ?? ""),
    a["screen_size"] != null ? `${a["screen_size"]}" screen` : "",
    String(a["operating_system"] ?? ""),
    a["ram_size"] != null ? `${a["ram_size"]} GB RAM` : "",
    a["hard_drive_size"] != null ? `${a["hard_drive_size"]} GB storage` : "",
    [a["cpu_brand"], a["cpu_speed"] != null ? `${a["cpu_speed"]} GHz` : "", a["cpu_cores"] != null ? `${a["cpu_cores"]} cores` : ""]
      .filter(Boolean)
      .join(" "),
    a["battery_life"] != null ? `${a["battery_life"]} h battery` : "",
  ];
  return parts.filter((p) => p !== "").join(" | ");
}

export class ShopController {
  phase: Phase = "loading";
  schema: SchemaWire | null = null;
  panel: FacetPanel | null = null;
  view: ViewOptions = { method: "undr", cohort: "all", k: 5, adminView: false };
  ranking: RankingWire | null = null; // last good response; order is never re-sorted client-side
  stale = false; // ranking shown is older than the last attempted fetch
  submit: SubmitState = { pending: false, submitting: false, lastRecordId: null };
  products = new Map<string, ProductWire>();
  private listeners: Array<() => void> = [];

  constructor(private readonly api: ShopApi) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  async init(): Promise<void> {
    this.phase = "loading";
    this.notify();
    try {
      this.schema = await this.api.getFacets();
      this.panel = new FacetPanel(this.schema.facets.map((f) => f.facet_id));
      const products = await this.api.getProducts();
      this.products = new Map(products.products.map((p) => [p.product_id, p]));
      this.phase = "ready";
      this.notify();
      await this.refreshRanking();
    } catch {
      this.phase = "schema_error"; // blocking banner; retry() re-runs init
      this.notify();
    }
  }

  retry(): Promise<void> {
    return this.init();
  }

  /** Re-fetch the list; on failure keep the last good list and raise the stale badge. */
  async refreshRanking(): Promise<void> {
    try {
      this.ranking = await this.api.getRanking(this.view.method, this.view.cohort, this.view.k);
      this.stale = false;
    } catch {
      this.stale = this.ranking !== null;
    }
    this.notify();
  }

  async setMethod(method: RankingMethod): Promise<void> {
    this.view.method = method;
    await this.refreshRanking();
  }

  async setCohort(cohort: CohortId): Promise<void> {
    this.view.cohort = cohort;
    await this.refreshRanking();
  }

  async setK(k: number): Promise<void> {
    this.view.k = k;
    await this.refreshRanking();
  }

  setAdminView(enabled: boolean): void {
    this.view.adminView = enabled;
    this.notify();
  }

  /** Toggle a bin locally and stream the facet's new state to the server. */
  async toggleBin(facetId: string, binId: string): Promise<void> {
    if (!this.panel) throw new Error("panel not ready");
    const selection = this.panel.toggleBin(facetId, binId);
    this.notify();
    await this.api.postSelection(this.panel.sessionId, facetId, selection, this.panel.nextSequence());
  }

  /** The explicit "any" control; clears the facet server-side too. */
  async chooseAny(facetId: string): Promise<void> {
    if (!this.panel) throw new Error("panel not ready");
    const selection = this.panel.setAny(facetId);
    this.notify();
    await this.api.postSelection(this.panel.sessionId, facetId, selection, this.panel.nextSequence());
  }

  /** Finalize the session; on success the panel resets under a new session id.
   * On network failure the submission stays queued and retrySubmit() re-runs it. */
  async submitSession(usageTasks: string[] = []): Promise<FinalizeResponseWire | null> {
    if (!this.panel || this.submit.submitting) return null;
    this.submit.submitting = true;
    this.notify();
    try {
      const response = await this.api.finalizeSession(this.panel.sessionId, usageTasks);
      this.submit = { pending: false, submitting: false, lastRecordId: response.record.record_id };
      this.panel.reset(newSessionId());
      this.notify();
      return response;
    } catch {
      this.submit = { ...this.submit, pending: true, submitting: false };
      this.notify();
      return null;
    }
  }

  retrySubmit(usageTasks: string[] = []): Promise<FinalizeResponseWire | null> {
    return this.submitSession(usageTasks);
  }

  /** Admin action: rebuild weight tables from all finalized sessions, then
   * refresh the list so it reflects the updated weights. */
  async triggerRecompute(): Promise<Record<string, { old_fingerprint: string; new_fingerprint: string }>> {
    const response = await this.api.recomputeWeights(null);
    await this.refreshRanking();
    return response.tables;
  }

  titleFor(productId: string): string {
    const product = this.products.get(productId);
    return product ? composeTitle(product) : productId;
  }
}
