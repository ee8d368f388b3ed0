import type { Card } from "./types.js";

/**
 * Bookmark sidebar. The server is the authority on what is bookmarked and in
 * which order (insertion order); this just mirrors the latest fetch.
 */
export class Sidebar {
  private list: HTMLUListElement;

  constructor(
    readonly root: HTMLElement,
    private onRemove: (cardId: string) => void,
  ) {
    root.classList.add("sidebar");
    const title = document.createElement("h2");
    title.textContent = "Bookmarks";
    root.appendChild(title);
    this.list = document.createElement("ul");
    this.list.className = "bookmark-list";
    root.appendChild(this.list);
  }

  render(cards: Card[]) {
    this.list.textContent = "";
    for (const card of cards) {
      const item = document.createElement("li");
      item.dataset.cardId = card.id;

      const label = document.createElement("span");
      label.className = "bookmark-label";
      label.textContent = card.article?.title ?? card.summary;
      item.appendChild(label);

      const remove = document.createElement("button");
      remove.type = "button";
      remove.className = "bookmark-remove";
      remove.textContent = "remove";
      remove.onclick = () => this.onRemove(card.id);
      item.appendChild(remove);

      this.list.appendChild(item);
    }
    if (!cards.length) {
      const empty = document.createElement("li");
      empty.className = "bookmark-empty";
      empty.textContent = "Nothing bookmarked yet.";
      this.list.appendChild(empty);
    }
  }

  ids(): string[] {
    return [...this.list.querySelectorAll<HTMLLIElement>("li[data-card-id]")].map(
      (li) => li.dataset.cardId!,
    );
  }
}
