// View model: everything the graph view draws, derived purely from service
// responses. Rebuilding from a fresh snapshot is what guarantees stale
// elements disappear after mutations.

import type { EdgeData, GraphResponse, NodeData, PartitionData } from "./api.js";

export interface ViewNode {
  id: string;
  label: string;
  displayName: string;
  community: number | null;
  color: string;
  hopBadge: number | null;
  highlighted: boolean;
  isRoot: boolean;
}

export interface ViewEdge {
  id: string;
  src: string;
  dst: string;
  predicate: string;
}

export interface GraphViewModel {
  nodes: ViewNode[];
  edges: ViewEdge[];
  selection: string | null;
  communityLegend: Array<{ community: number; color: string }>;
}

// fixed palette; community ids map onto it round-robin
const PALETTE = [
  "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2",
  "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];
const ROOT_COLOR = "#222222";
const UNASSIGNED_COLOR = "#8d99ae";

export function communityColor(community: number | null): string {
  if (community === null) return UNASSIGNED_COLOR;
  return PALETTE[community % PALETTE.length];
}

export interface Overlays {
  highlighted?: Set<string>;
  hopBadges?: Map<string, number>;
  selection?: string | null;
}

export function buildViewModel(
  graph: GraphResponse,
  partitions: PartitionData[],
  overlays: Overlays = {},
): GraphViewModel {
  const level0 = partitions.find((p) => p.level === 0);
  const highlighted = overlays.highlighted ?? new Set<string>();
  const hopBadges = overlays.hopBadges ?? new Map<string, number>();

  const nodes: ViewNode[] = graph.nodes.map((n: NodeData) => {
    const isRoot = n.label === "User";
    const community = level0 ? level0.assignment[n.id] ?? null : null;
    return {
      id: n.id,
      label: n.label,
      displayName: n.display_name,
      community,
      color: isRoot ? ROOT_COLOR : communityColor(community),
      hopBadge: hopBadges.has(n.id) ? hopBadges.get(n.id)! : null,
      highlighted: highlighted.has(n.id),
      isRoot,
    };
  });

  const ids = new Set(nodes.map((n) => n.id));
  const edges: ViewEdge[] = graph.edges
    .filter((e: EdgeData) => ids.has(e.src) && ids.has(e.dst))
    .map((e) => ({ id: e.id, src: e.src, dst: e.dst, predicate: e.predicate }));

  const seen = new Set<number>();
  const legend: Array<{ community: number; color: string }> = [];
  for (const node of nodes) {
    if (node.community !== null && !seen.has(node.community)) {
      seen.add(node.community);
      legend.push({ community: node.community, color: node.color });
    }
  }
  legend.sort((a, b) => a.community - b.community);

  const selection =
    overlays.selection && ids.has(overlays.selection) ? overlays.selection : null;
  return { nodes, edges, selection, communityLegend: legend };
}

export function formatProperty(value: unknown): string {
  if (value === null || value === undefined) return "";
  if (typeof value === "object" && value !== null && "$instant" in (value as object)) {
    return String((value as { $instant: string }).$instant);
  }
  return String(value);
}
