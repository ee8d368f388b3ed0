import { describe, expect, it, vi } from "vitest";
import {
  buildAspectColors,
  removeWithAnimation,
  renderCard,
  renderEmptyState,
} from "../src/cards.js";
import type { Card } from "../src/types.js";

const ASPECTS = [
  { name: "Economy", color: "#855723" },
  { name: "Environment & Sustainability", color: "#2e7d32" },
  { name: "Equality & Justice", color: "#6a1b9a" },
  { name: "Information & Discourse", color: "#1565c0" },
  { name: "Health & Well-being", color: "#c62828" },
  { name: "Politics", color: "#4527a0" },
  { name: "Power", color: "#37474f" },
  { name: "Security & Privacy", color: "#00695c" },
  { name: "User Experience & Entertainment", color: "#ef6c00" },
  { name: "Social Norms & Relationships", color: "#ad1457" },
];

function makeCard(n: number, aspect: string): Card {
  return {
    id: `card-${n}`,
    article_id: `art-${n}`,
    domain: "social media",
    summary: `consequence number ${n}`,
    aspect,
    provenance: "pipeline",
    created_at: "2025-06-30T09:00:00+00:00",
    article: {
      title: `Story ${n}`,
      url: `https://news.example/stories/${n}`,
      source: "news.example",
    },
  };
}

const noHandlers = { onToggleBookmark: () => {}, onDismiss: () => {} };

// jsdom normalizes backgroundColor to rgb(); normalize expectations the same way.
function cssColor(value: string): string {
  const probe = document.createElement("div");
  probe.style.backgroundColor = value;
  return probe.style.backgroundColor;
}

describe("renderCard", () => {
  it("colors the header by aspect, one distinct color per aspect", () => {
    const colors = buildAspectColors(ASPECTS);
    const seen = new Set<string>();
    for (const [i, aspect] of ASPECTS.entries()) {
      const el = renderCard(makeCard(i, aspect.name), colors, noHandlers);
      const header = el.querySelector<HTMLElement>(".card-header")!;
      expect(header.style.backgroundColor).toBe(cssColor(aspect.color));
      seen.add(header.style.backgroundColor);
    }
    expect(seen.size).toBe(10);
  });

  it("shows summary, linked title opening a new tab, and source name", () => {
    const el = renderCard(makeCard(3, "Economy"), buildAspectColors(ASPECTS), noHandlers);
    expect(el.querySelector(".card-summary")!.textContent).toBe("consequence number 3");
    const link = el.querySelector<HTMLAnchorElement>(".card-origin a")!;
    expect(link.textContent).toBe("Story 3");
    expect(link.href).toBe("https://news.example/stories/3");
    expect(link.target).toBe("_blank");
    expect(link.rel).toContain("noopener");
    expect(el.querySelector(".card-source")!.textContent).toBe("news.example");
  });

  it("copes with a card whose article is missing", () => {
    const card = { ...makeCard(4, "Power"), article: null };
    const el = renderCard(card, buildAspectColors(ASPECTS), noHandlers);
    expect(el.querySelector(".card-origin a")).toBeNull();
  });

  it("bookmark button toggles pressed state and reports the new state", () => {
    const toggles: boolean[] = [];
    const el = renderCard(makeCard(5, "Politics"), buildAspectColors(ASPECTS), {
      ...noHandlers,
      onToggleBookmark: (_c, on) => toggles.push(on),
    });
    const btn = el.querySelector<HTMLButtonElement>(".bookmark-btn")!;
    expect(btn.getAttribute("aria-pressed")).toBe("false");
    btn.click();
    expect(btn.getAttribute("aria-pressed")).toBe("true");
    btn.click();
    expect(toggles).toEqual([true, false]);
  });

  it("dismiss button hands back the card and its element", () => {
    const card = makeCard(6, "Economy");
    const onDismiss = vi.fn();
    const el = renderCard(card, buildAspectColors(ASPECTS), { ...noHandlers, onDismiss });
    el.querySelector<HTMLButtonElement>(".dismiss-btn")!.click();
    expect(onDismiss).toHaveBeenCalledWith(card, el);
  });
});

describe("removeWithAnimation", () => {
  it("marks the element as leaving, then detaches it", async () => {
    const el = document.createElement("article");
    document.body.appendChild(el);
    const done = removeWithAnimation(el);
    expect(el.classList.contains("card-leaving")).toBe(true);
    await done;
    expect(el.isConnected).toBe(false);
  });
});

describe("renderEmptyState", () => {
  it("explains that nothing matched", () => {
    expect(renderEmptyState().textContent).toMatch(/no cards match/i);
  });
});
