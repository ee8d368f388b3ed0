import { ApiClient, ApiError } from "./api.js";
import type { DomainInfo } from "./types.js";

export class ImportDialog {
  readonly form: HTMLFormElement;
  readonly urlInput: HTMLInputElement;
  readonly domainInput: HTMLInputElement;
  readonly status: HTMLElement;

  constructor(
    readonly root: HTMLElement,
    private client: ApiClient,
    domains: DomainInfo[],
    private onSubmitted?: () => void,
  ) {
    root.classList.add("import-dialog");
    const title = document.createElement("h2");
    title.textContent = "Import an article";
    root.appendChild(title);

    this.form = document.createElement("form");

    this.urlInput = document.createElement("input");
    this.urlInput.type = "url";
    this.urlInput.name = "url";
    this.urlInput.placeholder = "https://example.com/story";
    this.urlInput.required = true;
    this.form.appendChild(this.urlInput);

    this.domainInput = document.createElement("input");
    this.domainInput.name = "domain";
    this.domainInput.placeholder = "technology domain";
    this.domainInput.required = true;
    this.domainInput.setAttribute("list", "import-domains");
    const datalist = document.createElement("datalist");
    datalist.id = "import-domains";
    for (const d of domains) {
      const opt = document.createElement("option");
      opt.value = d.name;
      datalist.appendChild(opt);
    }
    this.form.appendChild(this.domainInput);
    this.form.appendChild(datalist);

    const submit = document.createElement("button");
    submit.type = "submit";
    submit.textContent = "Import";
    this.form.appendChild(submit);
    root.appendChild(this.form);

    this.status = document.createElement("div");
    this.status.className = "import-status";
    root.appendChild(this.status);

    this.form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.submit(this.urlInput.value.trim(), this.domainInput.value.trim());
    });
  }

  async submit(url: string, domain: string): Promise<void> {
    this.status.textContent = "";
    this.status.className = "import-status";
    const note = document.createElement("p");
    note.textContent = "Submitting…";
    this.status.appendChild(note);
    try {
      const pending = await this.client.submitImport(url, domain);
      this.status.textContent = "";
      this.status.classList.add("import-pending");

      const badge = document.createElement("span");
      badge.className = "pending-badge";
      badge.textContent = "pending approval";
      this.status.appendChild(badge);

      if (pending.extracted_card) {
        const preview = document.createElement("div");
        preview.className = "import-preview";
        const aspect = document.createElement("strong");
        aspect.textContent = pending.extracted_card.aspect;
        preview.appendChild(aspect);
        const summary = document.createElement("p");
        summary.textContent = pending.extracted_card.summary;
        preview.appendChild(summary);
        this.status.appendChild(preview);
      }
      this.onSubmitted?.();
    } catch (err) {
      this.status.textContent = "";
      this.status.classList.add("import-error");
      const msg = document.createElement("p");
      if (err instanceof ApiError && err.code === "pipeline_rejected") {
        msg.className = "import-rejected";
        msg.dataset.stage = err.stage ?? "";
        msg.textContent = `Rejected at the ${err.stage} stage: the article does not appear to discuss an undesirable consequence of ${domain}.`;
      } else if (err instanceof ApiError) {
        msg.textContent = `Import failed: ${err.message}`;
      } else {
        msg.textContent = "Import failed: network error.";
      }
      this.status.appendChild(msg);
    }
  }
}
