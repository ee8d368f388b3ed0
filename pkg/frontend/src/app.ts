import { ApiClient } from "./api.js";
import { ApprovalsPanel } from "./approvals.js";
import {
  buildAspectColors,
  removeWithAnimation,
  renderCard,
  renderEmptyState,
  type AspectColors,
} from "./cards.js";
import { ImportDialog } from "./importDialog.js";
import { Sidebar } from "./sidebar.js";
import { UrlState, type ViewState } from "./state.js";
import type { AspectInfo, Card, DomainInfo } from "./types.js";

const DEFAULT_PAGE_SIZE = 24;
const SEARCH_K = 20;

export interface AppOptions {
  pageSize?: number;
}

/**
 * Event-driven controller. All view changes funnel through the URL: widgets
 * call urlState.set(), the subscription re-renders, so reloading any URL
 * reproduces the same view.
 */
export class App {
  readonly grid: HTMLElement;
  readonly sidebar: Sidebar;
  readonly importDialog: ImportDialog;
  readonly approvals: ApprovalsPanel;
  readonly toolbar: HTMLElement;

  private colors: AspectColors;
  private pageSize = DEFAULT_PAGE_SIZE;
  private bookmarkedIds = new Set<string>();
  private shown = new Set<string>();
  private total: number | null = null;
  private pageSeed: number | null = null;
  private inflight: AbortController | null = null;
  private domainBoxes = new Map<string, HTMLInputElement>();
  private aspectBoxes = new Map<string, HTMLInputElement>();
  private searchInput!: HTMLInputElement;
  private modeSelect!: HTMLSelectElement;
  private orderSelect!: HTMLSelectElement;

  private constructor(
    readonly root: HTMLElement,
    private client: ApiClient,
    private urlState: UrlState,
    aspects: AspectInfo[],
    domains: DomainInfo[],
  ) {
    this.colors = buildAspectColors(aspects);

    this.toolbar = document.createElement("div");
    this.toolbar.className = "toolbar";
    this.buildToolbar(
      domains.map((d) => d.name),
      aspects.map((a) => a.name),
    );

    this.grid = document.createElement("div");
    this.grid.className = "card-grid";

    const aside = document.createElement("aside");
    aside.className = "side-panel";
    this.sidebar = new Sidebar(document.createElement("section"), (id) => {
      void this.unbookmark(id);
    });
    aside.appendChild(this.sidebar.root);

    const importBox = document.createElement("details");
    importBox.className = "import-box";
    importBox.appendChild(document.createElement("summary")).textContent = "Import";
    const importBody = document.createElement("div");
    importBox.appendChild(importBody);
    this.importDialog = new ImportDialog(importBody, client, domains);
    aside.appendChild(importBox);

    const approvalsBox = document.createElement("details");
    approvalsBox.className = "approvals-box";
    approvalsBox.appendChild(document.createElement("summary")).textContent = "Approvals";
    const approvalsBody = document.createElement("div");
    approvalsBox.appendChild(approvalsBody);
    this.approvals = new ApprovalsPanel(approvalsBody, client, () => {
      void this.refresh(this.urlState.get());
    });
    aside.appendChild(approvalsBox);

    const main = document.createElement("main");
    main.appendChild(this.toolbar);
    main.appendChild(this.grid);

    const sentinel = document.createElement("div");
    sentinel.className = "scroll-sentinel";
    main.appendChild(sentinel);
    if (typeof IntersectionObserver !== "undefined") {
      new IntersectionObserver((entries) => {
        if (entries.some((e) => e.isIntersecting)) void this.loadNextPage();
      }).observe(sentinel);
    }

    root.textContent = "";
    root.classList.add("app");
    root.appendChild(main);
    root.appendChild(aside);
  }

  static async create(
    root: HTMLElement,
    client: ApiClient,
    urlState: UrlState,
    opts: AppOptions = {},
  ): Promise<App> {
    const [aspects, domains] = await Promise.all([client.getAspects(), client.getDomains()]);
    const app = new App(root, client, urlState, aspects, domains);
    if (opts.pageSize) app.pageSize = opts.pageSize;
    urlState.subscribe((state) => void app.refresh(state));
    await app.refreshBookmarks(); // before first paint so buttons start pressed
    await app.refresh(urlState.get());
    return app;
  }

  /** Stop listening to the window; used when a test replaces the app. */
  dispose() {
    this.inflight?.abort();
    this.urlState.dispose();
  }

  private buildToolbar(domains: string[], aspects: string[]) {
    const filters = document.createElement("div");
    filters.className = "filters";
    filters.appendChild(this.checkboxGroup("Domains", domains, this.domainBoxes, "domain-filter"));
    filters.appendChild(this.checkboxGroup("Aspects", aspects, this.aspectBoxes, "aspect-filter"));
    this.toolbar.appendChild(filters);

    const controls = document.createElement("div");
    controls.className = "controls";

    const search = document.createElement("form");
    search.className = "search-form";
    this.searchInput = document.createElement("input");
    this.searchInput.type = "search";
    this.searchInput.placeholder = "search consequences";
    search.appendChild(this.searchInput);
    this.modeSelect = document.createElement("select");
    for (const [value, label] of [
      ["term", "term match"],
      ["semantic", "semantic"],
    ] as const) {
      const opt = document.createElement("option");
      opt.value = value;
      opt.textContent = label;
      this.modeSelect.appendChild(opt);
    }
    search.appendChild(this.modeSelect);
    const go = document.createElement("button");
    go.type = "submit";
    go.textContent = "Search";
    search.appendChild(go);
    search.addEventListener("submit", (ev) => {
      ev.preventDefault();
      this.applyWidgets();
    });
    controls.appendChild(search);

    this.orderSelect = document.createElement("select");
    this.orderSelect.className = "order-select";
    for (const value of ["shuffled", "newest"] as const) {
      const opt = document.createElement("option");
      opt.value = value;
      opt.textContent = value;
      this.orderSelect.appendChild(opt);
    }
    this.orderSelect.onchange = () => this.applyWidgets();
    controls.appendChild(this.orderSelect);

    const shuffle = document.createElement("button");
    shuffle.type = "button";
    shuffle.className = "shuffle-btn";
    shuffle.textContent = "Shuffle";
    shuffle.onclick = () => this.shuffle();
    controls.appendChild(shuffle);

    this.toolbar.appendChild(controls);
  }

  private checkboxGroup(
    label: string,
    names: string[],
    registry: Map<string, HTMLInputElement>,
    cls: string,
  ): HTMLElement {
    const group = document.createElement("fieldset");
    group.className = cls;
    const legend = document.createElement("legend");
    legend.textContent = label;
    group.appendChild(legend);
    for (const name of names) {
      const wrap = document.createElement("label");
      const box = document.createElement("input");
      box.type = "checkbox";
      box.value = name;
      box.onchange = () => this.applyWidgets();
      registry.set(name, box);
      wrap.appendChild(box);
      wrap.appendChild(document.createTextNode(name));
      group.appendChild(wrap);
    }
    return group;
  }

  /** Collect widget values into a state and push it onto the URL. */
  private applyWidgets() {
    const prev = this.urlState.get();
    const state: ViewState = {
      domains: new Set([...this.domainBoxes.values()].filter((b) => b.checked).map((b) => b.value)),
      aspects: new Set([...this.aspectBoxes.values()].filter((b) => b.checked).map((b) => b.value)),
      query: this.searchInput.value.trim(),
      mode: this.modeSelect.value === "semantic" ? "semantic" : "term",
      order: this.orderSelect.value === "newest" ? "newest" : "shuffled",
      seed: prev.seed,
    };
    this.urlState.set(state, { push: true });
  }

  private syncWidgets(state: ViewState) {
    for (const [name, box] of this.domainBoxes) box.checked = state.domains.has(name);
    for (const [name, box] of this.aspectBoxes) box.checked = state.aspects.has(name);
    this.searchInput.value = state.query;
    this.modeSelect.value = state.mode;
    this.orderSelect.value = state.order;
  }

  shuffle() {
    const state = this.urlState.get();
    state.order = "shuffled";
    state.seed = null; // the server picks the next seed
    this.urlState.set(state, { push: true });
  }

  async refresh(state: ViewState): Promise<void> {
    this.syncWidgets(state);
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    this.grid.textContent = "";
    this.shown.clear();
    this.total = null;
    this.pageSeed = null;

    try {
      if (state.mode === "semantic" && state.query) {
        const hits = await this.client.searchCards(
          state.query,
          SEARCH_K,
          { domains: [...state.domains], aspects: [...state.aspects] },
          controller.signal,
        );
        this.total = hits.length;
        this.appendCards(hits.map((h) => h.card));
      } else {
        const page = await this.client.listCards(
          {
            domains: [...state.domains],
            aspects: [...state.aspects],
            q: state.query || undefined,
            order: state.order,
            seed: state.order === "shuffled" ? state.seed : null,
            offset: 0,
            limit: this.pageSize,
          },
          controller.signal,
        );
        this.total = page.total;
        this.pageSeed = page.seed;
        if (state.order === "shuffled" && page.seed !== null && page.seed !== state.seed) {
          this.urlState.recordSeed(page.seed);
        }
        this.appendCards(page.cards);
      }
    } catch (err) {
      if (controller.signal.aborted) return; // superseded by a newer view
      throw err;
    }
    if (!this.shown.size) this.grid.appendChild(renderEmptyState());
  }

  async loadNextPage(): Promise<void> {
    const state = this.urlState.get();
    if (state.mode === "semantic" && state.query) return;
    if (this.total === null) return; // initial load still in flight
    if (this.shown.size >= this.total) return;
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const page = await this.client.listCards(
        {
          domains: [...state.domains],
          aspects: [...state.aspects],
          q: state.query || undefined,
          order: state.order,
          seed: state.order === "shuffled" ? (state.seed ?? this.pageSeed) : null,
          offset: this.shown.size,
          limit: this.pageSize,
        },
        controller.signal,
      );
      this.total = page.total;
      this.appendCards(page.cards);
    } catch (err) {
      if (controller.signal.aborted) return;
      throw err;
    }
  }

  private appendCards(cards: Card[]) {
    const empty = this.grid.querySelector(".empty-state");
    if (empty) empty.remove();
    for (const card of cards) {
      if (this.shown.has(card.id)) continue;
      this.shown.add(card.id);
      this.grid.appendChild(
        renderCard(
          card,
          this.colors,
          {
            onToggleBookmark: (c, on) => void this.toggleBookmark(c, on),
            onDismiss: (c, el) => void this.dismiss(c, el),
          },
          this.bookmarkedIds.has(card.id),
        ),
      );
    }
  }

  private async toggleBookmark(card: Card, on: boolean): Promise<void> {
    if (on) await this.client.bookmark(card.id);
    else await this.client.unbookmark(card.id);
    await this.refreshBookmarks();
  }

  private async unbookmark(cardId: string): Promise<void> {
    await this.client.unbookmark(cardId);
    await this.refreshBookmarks();
  }

  private async dismiss(card: Card, el: HTMLElement): Promise<void> {
    await this.client.dismiss(card.id);
    this.shown.delete(card.id);
    if (this.total !== null && this.total > 0) this.total -= 1;
    await removeWithAnimation(el);
    if (!this.grid.children.length) this.grid.appendChild(renderEmptyState());
  }

  async refreshBookmarks(): Promise<void> {
    const cards = await this.client.listBookmarks();
    this.bookmarkedIds = new Set(cards.map((c) => c.id));
    this.sidebar.render(cards);
    // Converge grid buttons on the server's answer.
    for (const el of this.grid.querySelectorAll<HTMLElement>("article[data-card-id]")) {
      const pressed = this.bookmarkedIds.has(el.dataset.cardId!);
      const btn = el.querySelector<HTMLButtonElement>(".bookmark-btn");
      if (btn) {
        btn.setAttribute("aria-pressed", String(pressed));
        btn.textContent = pressed ? "★" : "☆";
      }
    }
  }
}
