import { describe, expect, it } from "vitest";

import type { GraphResponse, PartitionData } from "../src/api.js";
import { buildViewModel, communityColor, formatProperty } from "../src/model.js";

function node(id: string, label = "Entity", name = id) {
  return {
    id,
    label,
    display_name: name,
    canonical_key: name.toLowerCase(),
    properties: {},
    valid_start: null,
    valid_end: null,
    provenance: ["r"],
    has_vector: true,
    created_at: null,
  };
}

const graph: GraphResponse = {
  nodes: [node("aa", "User", "User"), node("bb", "Event", "Trip"), node("cc", "Receipt", "Ticket")],
  edges: [
    { id: "e1", src: "cc", dst: "bb", predicate: "during", properties: {}, provenance: [] },
    { id: "e2", src: "cc", dst: "zz", predicate: "broken", properties: {}, provenance: [] },
  ],
};

const partitions: PartitionData[] = [
  { level: 0, assignment: { bb: 0, cc: 0 }, quality: 0.1 },
];

describe("buildViewModel", () => {
  it("maps nodes, colors communities, drops dangling edges", () => {
    const model = buildViewModel(graph, partitions);
    expect(model.nodes).toHaveLength(3);
    const byId = Object.fromEntries(model.nodes.map((n) => [n.id, n]));
    expect(byId.aa.isRoot).toBe(true);
    expect(byId.bb.color).toBe(byId.cc.color);
    expect(byId.bb.color).toBe(communityColor(0));
    // an edge referencing a node missing from the snapshot never renders
    expect(model.edges.map((e) => e.id)).toEqual(["e1"]);
    expect(model.communityLegend).toEqual([
      { community: 0, color: communityColor(0) },
    ]);
  });

  it("applies highlight and hop overlays", () => {
    const model = buildViewModel(graph, partitions, {
      highlighted: new Set(["cc"]),
      hopBadges: new Map([["bb", 1]]),
      selection: "bb",
    });
    const byId = Object.fromEntries(model.nodes.map((n) => [n.id, n]));
    expect(byId.cc.highlighted).toBe(true);
    expect(byId.bb.hopBadge).toBe(1);
    expect(model.selection).toBe("bb");
  });

  it("drops a selection that no longer exists (stale element removal)", () => {
    const model = buildViewModel(graph, partitions, { selection: "gone" });
    expect(model.selection).toBeNull();
  });

  it("rebuild after deletion removes the node everywhere", () => {
    const after: GraphResponse = {
      nodes: graph.nodes.filter((n) => n.id !== "cc"),
      edges: graph.edges.filter((e) => e.src !== "cc" && e.dst !== "cc"),
    };
    const model = buildViewModel(after, partitions, {
      highlighted: new Set(["cc"]),
    });
    expect(model.nodes.find((n) => n.id === "cc")).toBeUndefined();
    expect(model.edges).toHaveLength(0);
  });
});

describe("formatProperty", () => {
  it("unwraps tagged instants and stringifies scalars", () => {
    expect(formatProperty({ $instant: "2025-07-18T09:00:00.000Z" })).toBe(
      "2025-07-18T09:00:00.000Z",
    );
    expect(formatProperty("95 EUR")).toBe("95 EUR");
    expect(formatProperty(95)).toBe("95");
    expect(formatProperty(null)).toBe("");
  });
});
