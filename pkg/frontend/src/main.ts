import { ApiClient } from "./api.js";
import { App } from "./app.js";
import { UrlState } from "./state.js";

function apiBase(): string {
  // ?api= wins so one static build can point at any service instance.
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  if (fromQuery) return fromQuery;
  const meta = document.querySelector('meta[name="api-base"]');
  return meta?.getAttribute("content") || window.location.origin;
}

const root = document.getElementById("app");
if (root) {
  const client = new ApiClient(apiBase());
  void App.create(root, client, new UrlState()).catch((err) => {
    root.textContent = `Could not reach the catalog service: ${err}`;
  });
}
