// Wire types mirroring the ranking service's versioned JSON payloads.

export interface ValueBinWire {
  bin_id: string;
  label: string;
  lower?: number | null;
  upper?: number | null;
  match_values?: string[];
}

export interface FacetWire {
  facet_id: string;
  label: string;
  kind: "categorical" | "numeric_range";
  unit: string | null;
  values: ValueBinWire[];
}

export interface SchemaWire {
  format_version: number;
  schema_id: string;
  facets: FacetWire[];
}

export interface ProductWire {
  product_id: string;
  title: string;
  attributes: Record<string, string | number>;
  rating_count: number;
  rating_sum: number;
  price_currency: string;
}

export interface ProductsWire {
  format_version: number;
  count: number;
  products: ProductWire[];
}

export interface BreakdownRowWire {
  facet_id: string;
  bin_id: string | null;
  facet_weight: number;
  value_weight: number;
  contribution: number;
  no_bin: boolean;
}

export interface RankingEntryWire {
  rank: number;
  product_id: string;
  score: number;
  title?: string;
  breakdown?: BreakdownRowWire[];
  coverage?: number;
}

export interface ProvenanceWire {
  fingerprint: string;
  pool_hash: string;
  denominator_mode: string;
  cohort_id: string;
}

export interface RankingWire {
  format_version: number;
  method: string;
  count: number;
  entries: RankingEntryWire[];
  tie_groups: string[][];
  provenance?: ProvenanceWire;
  cohort?: string;
}

export type SelectionWire = "any" | string[];

export interface SelectionRecordWire {
  record_id: string;
  selections: Record<string, SelectionWire>;
  usage_tasks: string[];
  domain_knowledge: number | null;
  demographics: Record<string, string> | null;
  source: string;
  timestamp: string | null;
}

export interface FinalizeResponseWire {
  finalized: boolean;
  record: SelectionRecordWire;
}

export interface SelectionAckWire {
  accepted: boolean;
  session_id: string;
  pending: Record<string, SelectionWire>;
}

export interface RecomputeResponseWire {
  recomputed: boolean;
  tables: Record<string, { old_fingerprint: string; new_fingerprint: string }>;
}

export interface WeightTableWire {
  format_version: number;
  cohort_id: string;
  total_users: number;
  provenance: ProvenanceWire & { computed_at: string; source_mix: Record<string, number> };
  facets: Array<{
    facet_id: string;
    users_specific: number;
    weight: { fraction: string; value: number };
    values: Array<{ bin_id: string; selection_count: number; weight: { fraction: string; value: number } }>;
  }>;
}

export type RankingMethod = "undr" | "rating_baseline";
export type CohortId = "all" | "basic" | "advanced";
