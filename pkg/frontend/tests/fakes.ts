// In-memory ShopApi stub mimicking the server's session/ranking semantics.

import type { ShopApi } from "../src/api.js";
import type {
  CohortId,
  FinalizeResponseWire,
  ProductsWire,
  RankingMethod,
  RankingWire,
  RecomputeResponseWire,
  SchemaWire,
  SelectionAckWire,
  SelectionWire,
  WeightTableWire,
} from "../src/types.js";

export const FAKE_SCHEMA: SchemaWire = {
  format_version: 1,
  schema_id: "fake",
  facets: [
    {
      facet_id: "screen_size",
      label: "Screen size",
      kind: "numeric_range",
      unit: "inches",
      values: [
        { bin_id: "lt12", label: "< 12", lower: null, upper: 12 },
        { bin_id: "14.1-16", label: "14.1 - 16", lower: 14.1, upper: 16.1 },
      ],
    },
    {
      facet_id: "brand",
      label: "Brand",
      kind: "categorical",
      unit: null,
      values: [
        { bin_id: "apple", label: "Apple", match_values: ["apple"] },
        { bin_id: "dell", label: "Dell", match_values: ["dell"] },
      ],
    },
  ],
};

export const FAKE_RANKING: RankingWire = {
  format_version: 1,
  method: "undr",
  count: 2,
  tie_groups: [],
  cohort: "all",
  provenance: {
    fingerprint: "fp-original",
    pool_hash: "deadbeef",
    denominator_mode: "selection_share",
    cohort_id: "all",
  },
  entries: [
    {
      rank: 1,
      product_id: "p1",
      score: 0.34,
      title: "Laptop 1",
      breakdown: [
        {
          facet_id: "screen_size",
          bin_id: "14.1-16",
          facet_weight: 0.85,
          value_weight: 0.4,
          contribution: 0.34,
          no_bin: false,
        },
        { facet_id: "brand", bin_id: null, facet_weight: 0.7, value_weight: 0, contribution: 0, no_bin: true },
      ],
      coverage: 1,
    },
    { rank: 2, product_id: "p2", score: 0.1, title: "Laptop 2", breakdown: [], coverage: 0 },
  ],
};

export const FAKE_BASELINE: RankingWire = {
  format_version: 1,
  method: "rating_baseline",
  count: 2,
  tie_groups: [],
  entries: [
    { rank: 1, product_id: "p2", score: 4.8, title: "Laptop 2" },
    { rank: 2, product_id: "p1", score: 4.5, title: "Laptop 1" },
  ],
};

export const FAKE_PRODUCTS: ProductsWire = {
  format_version: 1,
  count: 2,
  products: [
    {
      product_id: "p1",
      title: "Laptop 1",
      attributes: {
        brand: "apple",
        screen_size: 15.6,
        operating_system: "macos",
        ram_size: 16,
        hard_drive_size: 512,
        cpu_brand: "apple silicon",
        cpu_speed: 3.2,
        cpu_cores: 8,
        battery_life: 12,
        price: 999,
      },
      rating_count: 100,
      rating_sum: 450,
      price_currency: "GBP",
    },
    {
      product_id: "p2",
      title: "Laptop 2",
      attributes: { brand: "dell", screen_size: 11.0 },
      rating_count: 50,
      rating_sum: 240,
      price_currency: "GBP",
    },
  ],
};

export class FakeApi implements ShopApi {
  schemaFailures = 0;
  rankingFailures = 0;
  finalizeFailures = 0;
  events: Array<{ sessionId: string; facetId: string; selection: SelectionWire; sequence: number }> = [];
  finalized = new Map<string, FinalizeResponseWire>();
  sessions = new Map<string, Record<string, SelectionWire>>();
  ranking: RankingWire = FAKE_RANKING;
  baseline: RankingWire = FAKE_BASELINE;
  recomputeCount = 0;

  async getFacets(): Promise<SchemaWire> {
    if (this.schemaFailures > 0) {
      this.schemaFailures -= 1;
      throw new Error("schema unavailable");
    }
    return FAKE_SCHEMA;
  }

  async getProducts(): Promise<ProductsWire> {
    return FAKE_PRODUCTS;
  }

  async getRanking(method: RankingMethod, cohort: CohortId, k: number): Promise<RankingWire> {
    if (this.rankingFailures > 0) {
      this.rankingFailures -= 1;
      throw new Error("ranking unavailable");
    }
    const base = method === "undr" ? this.ranking : this.baseline;
    return { ...base, cohort, entries: base.entries.slice(0, k) };
  }

  async postSelection(
    sessionId: string,
    facetId: string,
    selection: SelectionWire,
    sequence: number,
  ): Promise<SelectionAckWire> {
    this.events.push({ sessionId, facetId, selection, sequence });
    const pending = this.sessions.get(sessionId) ?? {};
    pending[facetId] = selection;
    this.sessions.set(sessionId, pending);
    return { accepted: true, session_id: sessionId, pending };
  }

  async finalizeSession(sessionId: string, usageTasks: string[] = []): Promise<FinalizeResponseWire> {
    if (this.finalizeFailures > 0) {
      this.finalizeFailures -= 1;
      throw new Error("network down");
    }
    const existing = this.finalized.get(sessionId);
    if (existing) return existing;
    const selections: Record<string, SelectionWire> = {};
    for (const facet of FAKE_SCHEMA.facets) {
      selections[facet.facet_id] = this.sessions.get(sessionId)?.[facet.facet_id] ?? "any";
    }
    const response: FinalizeResponseWire = {
      finalized: true,
      record: {
        record_id: sessionId,
        selections,
        usage_tasks: usageTasks,
        domain_knowledge: null,
        demographics: null,
        source: "live_event",
        timestamp: "2025-01-01T00:00:00+00:00",
      },
    };
    this.finalized.set(sessionId, response);
    return response;
  }

  async recomputeWeights(): Promise<RecomputeResponseWire> {
    this.recomputeCount += 1;
    const fp = `fp-recompute-${this.recomputeCount}`;
    this.ranking = {
      ...this.ranking,
      provenance: { ...this.ranking.provenance!, fingerprint: fp },
    };
    return {
      recomputed: true,
      tables: { all: { old_fingerprint: "fp-original", new_fingerprint: fp } },
    };
  }

  async getWeights(): Promise<WeightTableWire> {
    throw new Error("not used by the fake-backed tests");
  }
}
