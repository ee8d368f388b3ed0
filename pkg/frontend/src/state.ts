export type SearchMode = "term" | "semantic";
export type CardOrder = "shuffled" | "newest";

export interface ViewState {
  domains: Set<string>;
  aspects: Set<string>;
  query: string;
  mode: SearchMode;
  order: CardOrder;
  seed: number | null;
}

export function defaultViewState(): ViewState {
  return {
    domains: new Set(),
    aspects: new Set(),
    query: "",
    mode: "term",
    order: "shuffled",
    seed: null,
  };
}

/** Parse the query string into a complete view state; absent keys fall back to defaults. */
export function parseViewState(search: string): ViewState {
  const params = new URLSearchParams(search);
  const state = defaultViewState();

  const domains = params.get("domains");
  if (domains) state.domains = new Set(domains.split(",").filter(Boolean));

  const aspects = params.get("aspects");
  if (aspects) state.aspects = new Set(aspects.split(",").filter(Boolean));

  state.query = params.get("q") ?? "";
  if (params.get("mode") === "semantic") state.mode = "semantic";
  if (params.get("order") === "newest") state.order = "newest";

  const seed = params.get("seed");
  if (seed !== null && /^-?\d+$/.test(seed)) state.seed = parseInt(seed, 10);
  return state;
}

/** Serialize only non-default values so shared URLs stay short. */
export function serializeViewState(state: ViewState): URLSearchParams {
  const params = new URLSearchParams();
  if (state.domains.size) params.set("domains", [...state.domains].sort().join(","));
  if (state.aspects.size) params.set("aspects", [...state.aspects].sort().join(","));
  if (state.query) params.set("q", state.query);
  if (state.mode !== "term") params.set("mode", state.mode);
  if (state.order !== "shuffled") params.set("order", state.order);
  if (state.order === "shuffled" && state.seed !== null) params.set("seed", String(state.seed));
  return params;
}

const STATE_KEYS = ["domains", "aspects", "q", "mode", "order", "seed"];

type Listener = (state: ViewState) => void;

/**
 * The URL is the source of truth for the view: widgets write through set(),
 * everything re-renders from get(). Unrelated query params (e.g. ?api=) are
 * left untouched so the page stays configurable.
 */
export class UrlState {
  private listeners: Listener[] = [];
  private onPop = () => this.notify();

  constructor(private win: Window = window) {
    this.win.addEventListener("popstate", this.onPop);
  }

  /** Detach from the window; notifications stop. */
  dispose() {
    this.win.removeEventListener("popstate", this.onPop);
    this.listeners = [];
  }

  get(): ViewState {
    return parseViewState(this.win.location.search);
  }

  set(state: ViewState, opts: { push?: boolean } = {}) {
    const url = new URL(this.win.location.href);
    for (const key of STATE_KEYS) url.searchParams.delete(key);
    for (const [key, value] of serializeViewState(state)) url.searchParams.set(key, value);
    if (opts.push) this.win.history.pushState(null, "", url);
    else this.win.history.replaceState(null, "", url);
    this.notify();
  }

  /** Record a server-chosen shuffle seed without re-rendering or adding history. */
  recordSeed(seed: number) {
    const url = new URL(this.win.location.href);
    url.searchParams.set("seed", String(seed));
    this.win.history.replaceState(null, "", url);
  }

  subscribe(listener: Listener) {
    this.listeners.push(listener);
  }

  notify() {
    const state = this.get();
    this.listeners.forEach((fn) => fn(state));
  }
}
