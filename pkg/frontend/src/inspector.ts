// Node inspector: properties, provenance, community, incident edges, and the
// entry point to the Red Pen. Strictly rendered from a /node/{id} response.

import type { NodeDetailResponse } from "./api.js";
import { formatProperty } from "./model.js";

export class InspectorPanel {
  constructor(
    private readonly container: HTMLElement,
    private readonly onRedPen: (detail: NodeDetailResponse) => void,
  ) {}

  clear(): void {
    this.container.innerHTML = "";
  }

  render(detail: NodeDetailResponse): void {
    const doc = this.container.ownerDocument;
    this.container.innerHTML = "";
    const node = detail.node;

    const title = doc.createElement("h3");
    title.textContent = `${node.label}: ${node.display_name}`;
    title.setAttribute("data-node-id", node.id);
    this.container.appendChild(title);

    const table = doc.createElement("table");
    table.setAttribute("class", "props");
    for (const key of Object.keys(node.properties).sort()) {
      const row = doc.createElement("tr");
      const k = doc.createElement("td");
      k.textContent = key;
      const v = doc.createElement("td");
      v.textContent = formatProperty(node.properties[key]);
      v.setAttribute("data-prop", key);
      row.appendChild(k);
      row.appendChild(v);
      table.appendChild(row);
    }
    this.container.appendChild(table);

    const facts = doc.createElement("ul");
    facts.setAttribute("class", "node-facts");
    const entries: Array<[string, string]> = [
      ["provenance", `${node.provenance.length} source record(s)`],
      ["incident-edges", `${detail.incident_edges} edge(s)`],
      ["community", detail.community === null ? "unassigned" : `community ${detail.community}`],
    ];
    if (node.valid_start) {
      entries.push(["interval", `${node.valid_start} / ${node.valid_end ?? node.valid_start}`]);
    }
    for (const [kind, text] of entries) {
      const li = doc.createElement("li");
      li.setAttribute("data-fact", kind);
      li.textContent = text;
      facts.appendChild(li);
    }
    this.container.appendChild(facts);

    const edges = doc.createElement("ul");
    edges.setAttribute("class", "incident-list");
    for (const { edge, neighbor } of detail.edges) {
      const li = doc.createElement("li");
      const arrow = edge.src === node.id ? "→" : "←";
      li.textContent = `${arrow} ${edge.predicate} ${neighbor.display_name}`;
      edges.appendChild(li);
    }
    this.container.appendChild(edges);

    const redPen = doc.createElement("button");
    redPen.setAttribute("class", "red-pen-button");
    redPen.textContent = "Red Pen: forget this memory";
    redPen.addEventListener("click", () => this.onRedPen(detail));
    this.container.appendChild(redPen);
  }
}
