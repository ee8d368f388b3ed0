export interface ArticleRef {
  title: string;
  url: string;
  source: string;
}

export interface Card {
  id: string;
  article_id: string;
  domain: string;
  summary: string;
  aspect: string;
  provenance: string;
  created_at: string;
  article: ArticleRef | null;
}

export interface CardPage {
  cards: Card[];
  total: number;
  order: string;
  seed: number | null;
  offset: number;
  limit: number;
}

export interface SearchHit {
  card: Card;
  score: number;
}

export interface AspectInfo {
  name: string;
  color: string;
}

export interface DomainInfo {
  name: string;
  approved: boolean;
}

export interface PendingImport {
  id: string;
  submitted_by: string;
  url: string;
  proposed_domain: string;
  extracted_card: Omit<Card, "article"> | null;
  state: "pending" | "approved" | "rejected";
  submitted_at: string;
  error: string | null;
}
