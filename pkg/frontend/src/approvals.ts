import { ApiClient, ApiError } from "./api.js";

/**
 * Minimal moderation list: paste the admin credential, review pending
 * imports, approve or reject. The credential stays in memory only.
 */
export class ApprovalsPanel {
  readonly tokenInput: HTMLInputElement;
  readonly list: HTMLUListElement;
  readonly message: HTMLElement;

  constructor(
    readonly root: HTMLElement,
    private client: ApiClient,
    private onApproved?: () => void,
  ) {
    root.classList.add("approvals");

    const row = document.createElement("div");
    row.className = "approvals-controls";
    this.tokenInput = document.createElement("input");
    this.tokenInput.type = "password";
    this.tokenInput.placeholder = "admin token";
    row.appendChild(this.tokenInput);
    const load = document.createElement("button");
    load.type = "button";
    load.textContent = "Load pending";
    load.onclick = () => void this.reload();
    row.appendChild(load);
    root.appendChild(row);

    this.message = document.createElement("p");
    this.message.className = "approvals-message";
    root.appendChild(this.message);

    this.list = document.createElement("ul");
    this.list.className = "approvals-list";
    root.appendChild(this.list);
  }

  async reload(): Promise<void> {
    this.message.textContent = "";
    this.list.textContent = "";
    let pending;
    try {
      pending = await this.client.listImports(this.tokenInput.value, "pending");
    } catch (err) {
      this.message.textContent =
        err instanceof ApiError && err.status === 401
          ? "Admin token rejected."
          : "Could not load pending imports.";
      return;
    }
    if (!pending.length) {
      this.message.textContent = "No pending imports.";
      return;
    }
    for (const item of pending) {
      const li = document.createElement("li");
      li.dataset.pendingId = item.id;

      const label = document.createElement("span");
      label.textContent = `${item.proposed_domain}: ${item.url}`;
      li.appendChild(label);

      const approve = document.createElement("button");
      approve.type = "button";
      approve.textContent = "approve";
      approve.onclick = () => void this.decide(item.id, "approve");
      li.appendChild(approve);

      const reject = document.createElement("button");
      reject.type = "button";
      reject.textContent = "reject";
      reject.onclick = () => void this.decide(item.id, "reject");
      li.appendChild(reject);

      this.list.appendChild(li);
    }
  }

  private async decide(pendingId: string, action: "approve" | "reject"): Promise<void> {
    try {
      if (action === "approve") {
        await this.client.approveImport(pendingId, this.tokenInput.value);
        this.onApproved?.();
      } else {
        await this.client.rejectImport(pendingId, this.tokenInput.value);
      }
    } catch {
      this.message.textContent = `Could not ${action} ${pendingId}.`;
      return;
    }
    await this.reload();
  }
}
