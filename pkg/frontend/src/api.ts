import type {
  AspectInfo,
  Card,
  CardPage,
  DomainInfo,
  PendingImport,
  SearchHit,
} from "./types.js";

const TOKEN_HEADER = "X-Client-Token";

export class ApiError extends Error {
  status: number;
  code: string;
  stage: string | null;
  pendingId: string | null;

  constructor(status: number, code: string, message: string, extra?: Record<string, unknown>) {
    super(message);
    this.status = status;
    this.code = code;
    this.stage = typeof extra?.stage === "string" ? extra.stage : null;
    this.pendingId = typeof extra?.pending_id === "string" ? extra.pending_id : null;
  }
}

export interface CardQuery {
  domains?: string[];
  aspects?: string[];
  q?: string;
  order?: "shuffled" | "newest";
  seed?: number | null;
  offset?: number;
  limit?: number;
}

interface RequestOptions {
  method?: string;
  query?: URLSearchParams;
  body?: unknown;
  signal?: AbortSignal;
  adminToken?: string;
}

/**
 * Thin typed wrapper over the catalog service JSON API. The server mints an
 * anonymous client token on first contact and echoes it back in a response
 * header; the client persists whatever the latest echo was so bookmarks and
 * dismissals follow the browser across reloads.
 */
export class ApiClient {
  readonly base: string;
  private store: Storage;

  constructor(base: string, store: Storage = window.localStorage) {
    this.base = base.replace(/\/+$/, "");
    this.store = store;
  }

  token(): string | null {
    return this.store.getItem("conseq-client-token");
  }

  private async request(path: string, opts: RequestOptions = {}): Promise<any> {
    const url = new URL(this.base + path);
    if (opts.query) {
      for (const [key, value] of opts.query) url.searchParams.append(key, value);
    }
    const headers: Record<string, string> = {};
    const token = this.token();
    if (token) headers[TOKEN_HEADER] = token;
    if (opts.adminToken) headers["Authorization"] = `Bearer ${opts.adminToken}`;
    if (opts.body !== undefined) headers["Content-Type"] = "application/json";

    const resp = await fetch(url, {
      method: opts.method ?? "GET",
      headers,
      body: opts.body === undefined ? undefined : JSON.stringify(opts.body),
      signal: opts.signal ?? null,
    });
    const echoed = resp.headers.get(TOKEN_HEADER);
    if (echoed) this.store.setItem("conseq-client-token", echoed);

    if (!resp.ok) {
      let payload: any = {};
      try {
        payload = await resp.json();
      } catch {
        // non-JSON error body; fall through to generic fields
      }
      throw new ApiError(
        resp.status,
        payload.code ?? "http_error",
        payload.message ?? `request failed with ${resp.status}`,
        payload,
      );
    }
    return resp.json();
  }

  private static cardParams(query: CardQuery): URLSearchParams {
    const params = new URLSearchParams();
    for (const d of query.domains ?? []) params.append("domains", d);
    for (const a of query.aspects ?? []) params.append("aspects", a);
    if (query.q) params.set("q", query.q);
    return params;
  }

  listCards(query: CardQuery, signal?: AbortSignal): Promise<CardPage> {
    const params = ApiClient.cardParams(query);
    params.set("order", query.order ?? "shuffled");
    if (query.seed !== undefined && query.seed !== null) params.set("seed", String(query.seed));
    if (query.offset !== undefined) params.set("offset", String(query.offset));
    if (query.limit !== undefined) params.set("limit", String(query.limit));
    return this.request("/cards", { query: params, signal });
  }

  async searchCards(q: string, k: number, query: CardQuery = {}, signal?: AbortSignal): Promise<SearchHit[]> {
    const params = ApiClient.cardParams({ ...query, q: undefined });
    params.set("q", q);
    params.set("k", String(k));
    const body = await this.request("/cards/search", { query: params, signal });
    return body.results;
  }

  async getAspects(): Promise<AspectInfo[]> {
    return (await this.request("/meta/aspects")).aspects;
  }

  async getDomains(): Promise<DomainInfo[]> {
    return (await this.request("/meta/domains")).domains;
  }

  async listBookmarks(): Promise<Card[]> {
    return (await this.request("/bookmarks")).cards;
  }

  async bookmark(cardId: string): Promise<void> {
    await this.request(`/bookmarks/${cardId}`, { method: "POST" });
  }

  async unbookmark(cardId: string): Promise<void> {
    await this.request(`/bookmarks/${cardId}`, { method: "DELETE" });
  }

  async dismiss(cardId: string): Promise<void> {
    await this.request(`/dismissals/${cardId}`, { method: "POST" });
  }

  async submitImport(url: string, domain: string): Promise<PendingImport> {
    const body = await this.request("/imports", { method: "POST", body: { url, domain } });
    return body.pending;
  }

  async listImports(adminToken: string, state?: string): Promise<PendingImport[]> {
    const params = new URLSearchParams();
    if (state) params.set("state", state);
    return (await this.request("/imports", { query: params, adminToken })).imports;
  }

  async approveImport(pendingId: string, adminToken: string): Promise<Card> {
    return (await this.request(`/imports/${pendingId}/approve`, { method: "POST", adminToken })).card;
  }

  async rejectImport(pendingId: string, adminToken: string): Promise<void> {
    await this.request(`/imports/${pendingId}/reject`, { method: "POST", adminToken });
  }
}
