import type { AspectInfo, Card } from "./types.js";

export type AspectColors = Map<string, string>;

export function buildAspectColors(aspects: AspectInfo[]): AspectColors {
  return new Map(aspects.map((a) => [a.name, a.color]));
}

export interface CardHandlers {
  onToggleBookmark: (card: Card, bookmarked: boolean) => void;
  onDismiss: (card: Card, el: HTMLElement) => void;
}

export function renderCard(
  card: Card,
  colors: AspectColors,
  handlers: CardHandlers,
  bookmarked = false,
): HTMLElement {
  const el = document.createElement("article");
  el.className = "card";
  el.dataset.cardId = card.id;
  el.dataset.aspect = card.aspect;
  el.dataset.domain = card.domain;

  const header = document.createElement("header");
  header.className = "card-header";
  header.style.backgroundColor = colors.get(card.aspect) ?? "#777777";

  const aspect = document.createElement("span");
  aspect.className = "card-aspect";
  aspect.textContent = card.aspect;
  header.appendChild(aspect);

  const domain = document.createElement("span");
  domain.className = "card-domain";
  domain.textContent = card.domain;
  header.appendChild(domain);
  el.appendChild(header);

  const summary = document.createElement("p");
  summary.className = "card-summary";
  summary.textContent = card.summary;
  el.appendChild(summary);

  const footer = document.createElement("footer");
  footer.className = "card-footer";

  const origin = document.createElement("div");
  origin.className = "card-origin";
  if (card.article) {
    const link = document.createElement("a");
    link.href = card.article.url;
    link.textContent = card.article.title;
    link.target = "_blank";
    link.rel = "noopener noreferrer";
    origin.appendChild(link);
    const source = document.createElement("span");
    source.className = "card-source";
    source.textContent = card.article.source;
    origin.appendChild(source);
  }
  footer.appendChild(origin);

  const actions = document.createElement("div");
  actions.className = "card-actions";

  const bookmark = document.createElement("button");
  bookmark.type = "button";
  bookmark.className = "bookmark-btn";
  bookmark.setAttribute("aria-pressed", String(bookmarked));
  bookmark.textContent = bookmarked ? "★" : "☆";
  bookmark.title = "Bookmark";
  bookmark.onclick = () => {
    const next = bookmark.getAttribute("aria-pressed") !== "true";
    bookmark.setAttribute("aria-pressed", String(next));
    bookmark.textContent = next ? "★" : "☆";
    handlers.onToggleBookmark(card, next);
  };
  actions.appendChild(bookmark);

  const dismiss = document.createElement("button");
  dismiss.type = "button";
  dismiss.className = "dismiss-btn";
  dismiss.textContent = "✕";
  dismiss.title = "Dismiss";
  dismiss.onclick = () => handlers.onDismiss(card, el);
  actions.appendChild(dismiss);

  footer.appendChild(actions);
  el.appendChild(footer);
  return el;
}

/**
 * Fade the element out, then detach it. Resolves on transitionend, with a
 * timer fallback for environments that never fire transitions (tests).
 */
export function removeWithAnimation(el: HTMLElement): Promise<void> {
  return new Promise((resolve) => {
    let done = false;
    const finish = () => {
      if (done) return;
      done = true;
      el.remove();
      resolve();
    };
    el.classList.add("card-leaving");
    el.addEventListener("transitionend", finish, { once: true });
    setTimeout(finish, 250);
  });
}

export function renderEmptyState(): HTMLElement {
  const el = document.createElement("div");
  el.className = "empty-state";
  el.textContent = "No cards match the current filters.";
  return el;
}
