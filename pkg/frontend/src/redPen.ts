// The Red Pen: two-step deletion. Step one shows the evidence summary
// (provenance count, incident edges) and arms a confirmation token; step two
// must present that token, so no single click can ever delete. Cancel
// disarms without any request.

import type { DeletionReceiptData, NodeDetailResponse, PkgraphClient } from "./api.js";

export interface PendingRedPen {
  targetId: string;
  token: string;
  displayName: string;
  provenanceCount: number;
  incidentEdges: number;
}

export class RedPenController {
  private pending: PendingRedPen | null = null;
  private counter = 0;

  constructor(
    private readonly client: PkgraphClient,
    private readonly container: HTMLElement,
    private readonly onDeleted: (receipt: DeletionReceiptData) => void,
    private readonly onError: (message: string) => void,
  ) {}

  get pendingAction(): PendingRedPen | null {
    return this.pending;
  }

  request(detail: NodeDetailResponse): PendingRedPen {
    this.counter += 1;
    this.pending = {
      targetId: detail.node.id,
      token: `redpen-${this.counter}-${detail.node.id.slice(0, 8)}`,
      displayName: detail.node.display_name,
      provenanceCount: detail.node.provenance.length,
      incidentEdges: detail.incident_edges,
    };
    this.renderDialog();
    return this.pending;
  }

  cancel(): void {
    this.pending = null;
    this.container.innerHTML = "";
  }

  async confirm(token: string): Promise<DeletionReceiptData | null> {
    if (!this.pending || this.pending.token !== token) {
      this.onError("no armed deletion matches that confirmation");
      return null;
    }
    const target = this.pending.targetId;
    this.pending = null;
    try {
      const { receipt } = await this.client.deleteNode(target);
      this.renderReceipt(receipt);
      this.onDeleted(receipt);
      return receipt;
    } catch (err) {
      this.container.innerHTML = "";
      this.onError(err instanceof Error ? err.message : String(err));
      return null;
    }
  }

  private renderDialog(): void {
    const doc = this.container.ownerDocument;
    const pending = this.pending!;
    this.container.innerHTML = "";

    const dialog = doc.createElement("div");
    dialog.setAttribute("class", "red-pen-dialog");
    dialog.setAttribute("data-token", pending.token);

    const text = doc.createElement("p");
    text.textContent =
      `Forget "${pending.displayName}"? This removes the node, ` +
      `${pending.incidentEdges} edge(s), and its vector entry. ` +
      `Backed by ${pending.provenanceCount} source record(s).`;
    dialog.appendChild(text);

    const confirm = doc.createElement("button");
    confirm.setAttribute("class", "confirm-delete");
    confirm.textContent = "Delete forever";
    confirm.addEventListener("click", () => void this.confirm(pending.token));
    dialog.appendChild(confirm);

    const cancel = doc.createElement("button");
    cancel.setAttribute("class", "cancel-delete");
    cancel.textContent = "Cancel";
    cancel.addEventListener("click", () => this.cancel());
    dialog.appendChild(cancel);

    this.container.appendChild(dialog);
  }

  private renderReceipt(receipt: DeletionReceiptData): void {
    const doc = this.container.ownerDocument;
    this.container.innerHTML = "";
    const panel = doc.createElement("div");
    panel.setAttribute("class", "deletion-receipt");
    const rows: Array<[string, number]> = [
      ["nodes", receipt.deleted_nodes.length],
      ["edges", receipt.deleted_edges.length],
      ["vectors", receipt.removed_vectors.length],
    ];
    const heading = doc.createElement("p");
    heading.textContent = "Memory excised. Removed:";
    panel.appendChild(heading);
    const list = doc.createElement("ul");
    for (const [kind, count] of rows) {
      const li = doc.createElement("li");
      li.setAttribute("data-removed", kind);
      li.textContent = `${count} ${kind}`;
      list.appendChild(li);
    }
    panel.appendChild(list);
    this.container.appendChild(panel);
  }
}
