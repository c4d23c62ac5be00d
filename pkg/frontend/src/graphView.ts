// SVG graph rendering: circles, predicate-labelled edges, hop badges,
// citation highlighting. Imperative and rebuilt per snapshot.

import { layoutGraph } from "./layout.js";
import type { GraphViewModel, ViewNode } from "./model.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface GraphViewCallbacks {
  onNodeClick?: (node: ViewNode) => void;
}

export class GraphView {
  private width = 900;
  private height = 600;

  constructor(
    private readonly container: HTMLElement,
    private readonly callbacks: GraphViewCallbacks = {},
  ) {}

  render(model: GraphViewModel): void {
    const doc = this.container.ownerDocument;
    this.container.innerHTML = "";

    const svg = doc.createElementNS(SVG_NS, "svg");
    svg.setAttribute("viewBox", `0 0 ${this.width} ${this.height}`);
    svg.setAttribute("class", "graph-canvas");

    const positions = layoutGraph(model.nodes, model.edges, {
      width: this.width,
      height: this.height,
    });

    for (const edge of model.edges) {
      const a = positions.get(edge.src)!;
      const b = positions.get(edge.dst)!;
      const line = doc.createElementNS(SVG_NS, "line");
      line.setAttribute("x1", String(a.x));
      line.setAttribute("y1", String(a.y));
      line.setAttribute("x2", String(b.x));
      line.setAttribute("y2", String(b.y));
      line.setAttribute("class", "graph-edge");
      line.setAttribute("data-edge-id", edge.id);
      svg.appendChild(line);

      const label = doc.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String((a.x + b.x) / 2));
      label.setAttribute("y", String((a.y + b.y) / 2 - 3));
      label.setAttribute("class", "edge-label");
      label.textContent = edge.predicate;
      svg.appendChild(label);
    }

    for (const node of model.nodes) {
      const p = positions.get(node.id)!;
      const group = doc.createElementNS(SVG_NS, "g");
      const classes = ["graph-node"];
      if (node.highlighted) classes.push("highlighted");
      if (node.id === model.selection) classes.push("selected");
      if (node.isRoot) classes.push("root");
      group.setAttribute("class", classes.join(" "));
      group.setAttribute("data-node-id", node.id);
      group.setAttribute("data-label", node.label);

      const circle = doc.createElementNS(SVG_NS, "circle");
      circle.setAttribute("cx", String(p.x));
      circle.setAttribute("cy", String(p.y));
      circle.setAttribute("r", node.isRoot ? "14" : "10");
      circle.setAttribute("fill", node.color);
      group.appendChild(circle);

      const text = doc.createElementNS(SVG_NS, "text");
      text.setAttribute("x", String(p.x));
      text.setAttribute("y", String(p.y + 24));
      text.setAttribute("class", "node-label");
      text.textContent =
        node.displayName.length > 24
          ? node.displayName.slice(0, 23) + "…"
          : node.displayName;
      group.appendChild(text);

      if (node.hopBadge !== null) {
        const badge = doc.createElementNS(SVG_NS, "text");
        badge.setAttribute("x", String(p.x + 12));
        badge.setAttribute("y", String(p.y - 10));
        badge.setAttribute("class", "hop-badge");
        badge.setAttribute("data-hop", String(node.hopBadge));
        badge.textContent = `h${node.hopBadge}`;
        group.appendChild(badge);
      }

      group.addEventListener("click", () => this.callbacks.onNodeClick?.(node));
      svg.appendChild(group);
    }

    const legend = doc.createElement("div");
    legend.setAttribute("class", "community-legend");
    for (const entry of model.communityLegend) {
      const item = doc.createElement("span");
      item.setAttribute("class", "legend-item");
      item.setAttribute("data-community", String(entry.community));
      item.setAttribute("style", `--swatch: ${entry.color}`);
      item.textContent = `community ${entry.community}`;
      legend.appendChild(item);
    }

    this.container.appendChild(svg);
    this.container.appendChild(legend);
  }
}
