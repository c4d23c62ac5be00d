// Deterministic force-directed layout. No d3: positions must be reproducible
// in tests, and the graph is personal-scale, so a fixed-step simulation with
// hash-seeded starting points is enough. The User root is pinned centre.

import type { ViewEdge, ViewNode } from "./model.js";

export interface Point {
  x: number;
  y: number;
}

function hash01(text: string, salt: number): number {
  let h = 2166136261 >>> 0;
  for (let i = 0; i < text.length; i++) {
    h = Math.imul(h ^ text.charCodeAt(i), 16777619) >>> 0;
  }
  h = Math.imul(h ^ salt, 2654435761) >>> 0;
  return (h >>> 8) / 0x1000000;
}

export interface LayoutOptions {
  width: number;
  height: number;
  iterations?: number;
  springLength?: number;
}

export function layoutGraph(
  nodes: ViewNode[],
  edges: ViewEdge[],
  options: LayoutOptions,
): Map<string, Point> {
  const { width, height } = options;
  const iterations = options.iterations ?? 120;
  const springLength = options.springLength ?? Math.min(width, height) / 5;
  const cx = width / 2;
  const cy = height / 2;

  const positions = new Map<string, Point>();
  for (const node of nodes) {
    if (node.isRoot) {
      positions.set(node.id, { x: cx, y: cy });
    } else {
      positions.set(node.id, {
        x: cx + (hash01(node.id, 1) - 0.5) * width * 0.8,
        y: cy + (hash01(node.id, 2) - 0.5) * height * 0.8,
      });
    }
  }

  const repulsion = springLength * springLength;
  for (let step = 0; step < iterations; step++) {
    const forces = new Map<string, Point>();
    for (const node of nodes) forces.set(node.id, { x: 0, y: 0 });

    for (let i = 0; i < nodes.length; i++) {
      const a = positions.get(nodes[i].id)!;
      for (let j = i + 1; j < nodes.length; j++) {
        const b = positions.get(nodes[j].id)!;
        let dx = a.x - b.x;
        let dy = a.y - b.y;
        let d2 = dx * dx + dy * dy;
        if (d2 < 1e-6) {
          // identical positions: push apart along a deterministic direction
          dx = hash01(nodes[i].id + nodes[j].id, 3) - 0.5;
          dy = hash01(nodes[i].id + nodes[j].id, 4) - 0.5;
          d2 = dx * dx + dy * dy;
        }
        const force = repulsion / d2;
        const fa = forces.get(nodes[i].id)!;
        const fb = forces.get(nodes[j].id)!;
        fa.x += dx * force * 0.01;
        fa.y += dy * force * 0.01;
        fb.x -= dx * force * 0.01;
        fb.y -= dy * force * 0.01;
      }
    }

    for (const edge of edges) {
      const a = positions.get(edge.src);
      const b = positions.get(edge.dst);
      if (!a || !b) continue;
      const dx = b.x - a.x;
      const dy = b.y - a.y;
      const dist = Math.sqrt(dx * dx + dy * dy) || 1;
      const stretch = (dist - springLength) / dist;
      const fa = forces.get(edge.src)!;
      const fb = forces.get(edge.dst)!;
      fa.x += dx * stretch * 0.05;
      fa.y += dy * stretch * 0.05;
      fb.x -= dx * stretch * 0.05;
      fb.y -= dy * stretch * 0.05;
    }

    const cooling = 1 - step / iterations;
    for (const node of nodes) {
      if (node.isRoot) continue; // pinned
      const p = positions.get(node.id)!;
      const f = forces.get(node.id)!;
      // gentle pull toward centre keeps disconnected pieces on screen
      f.x += (cx - p.x) * 0.002;
      f.y += (cy - p.y) * 0.002;
      p.x += Math.max(-12, Math.min(12, f.x)) * cooling;
      p.y += Math.max(-12, Math.min(12, f.y)) * cooling;
      p.x = Math.max(16, Math.min(width - 16, p.x));
      p.y = Math.max(16, Math.min(height - 16, p.y));
    }
  }
  return positions;
}
