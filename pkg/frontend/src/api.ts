// Typed client for the ranking service's versioned JSON API.

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
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null = null,
    readonly detail: unknown = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** The slice of the service the UI consumes; ApiClient is the HTTP implementation. */
export interface ShopApi {
  getFacets(): Promise<SchemaWire>;
  getProducts(): Promise<ProductsWire>;
  getRanking(method: RankingMethod, cohort: CohortId, k: number): Promise<RankingWire>;
  postSelection(
    sessionId: string,
    facetId: string,
    selection: SelectionWire,
    sequence: number,
  ): Promise<SelectionAckWire>;
  finalizeSession(
    sessionId: string,
    usageTasks?: string[],
    domainKnowledge?: number | null,
  ): Promise<FinalizeResponseWire>;
  recomputeWeights(cohort?: CohortId | null): Promise<RecomputeResponseWire>;
  getWeights(cohort: CohortId, fingerprint?: string): Promise<WeightTableWire>;
}

export class ApiClient implements ShopApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    } catch (cause) {
      throw new ApiError(`network failure for ${path}: ${String(cause)}`);
    }
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      // non-JSON error bodies are reported by status alone
    }
    if (!response.ok) {
      const detail = (body as { detail?: unknown } | null)?.detail ?? body;
      throw new ApiError(`${path} failed with ${response.status}`, response.status, detail);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getFacets(): Promise<SchemaWire> {
    return this.request("/api/v1/facets");
  }

  getProducts(): Promise<ProductsWire> {
    return this.request("/api/v1/products");
  }

  getRanking(method: RankingMethod, cohort: CohortId, k: number): Promise<RankingWire> {
    const params = new URLSearchParams({ method, cohort, k: String(k) });
    return this.request(`/api/v1/rankings?${params}`);
  }

  postSelection(
    sessionId: string,
    facetId: string,
    selection: SelectionWire,
    sequence: number,
  ): Promise<SelectionAckWire> {
    return this.post("/api/v1/events/selection", {
      session_id: sessionId,
      facet_id: facetId,
      selection,
      sequence,
    });
  }

  finalizeSession(
    sessionId: string,
    usageTasks: string[] = [],
    domainKnowledge: number | null = null,
  ): Promise<FinalizeResponseWire> {
    return this.post(`/api/v1/sessions/${encodeURIComponent(sessionId)}/finalize`, {
      usage_tasks: usageTasks,
      domain_knowledge: domainKnowledge,
    });
  }

  recomputeWeights(cohort: CohortId | null = null): Promise<RecomputeResponseWire> {
    return this.post("/api/v1/weights/recompute", { cohort });
  }

  getWeights(cohort: CohortId, fingerprint?: string): Promise<WeightTableWire> {
    const suffix = fingerprint ? `?fingerprint=${encodeURIComponent(fingerprint)}` : "";
    return this.request(`/api/v1/weights/${cohort}${suffix}`);
  }
}
