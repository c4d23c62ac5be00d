// Red Pen safety: no request without an armed token, cancel sends nothing,
// and every rendered count comes from the service receipt (transport
// intercepted to prove it).
import { beforeEach, describe, expect, it, vi } from "vitest";

import { PkgraphClient, type NodeDetailResponse } from "../src/api.js";
import { RedPenController } from "../src/redPen.js";

const detail: NodeDetailResponse = {
  node: {
    id: "ab".repeat(16),
    label: "Receipt",
    display_name: "Train ticket",
    canonical_key: "train ticket",
    properties: { amount: "95 EUR" },
    valid_start: null,
    valid_end: null,
    provenance: ["rec1"],
    has_vector: true,
    created_at: null,
  },
  edges: [],
  incident_edges: 2,
  community: null,
};

function makeController() {
  const calls: Array<{ url: string; method: string }> = [];
  const fetchImpl = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
    calls.push({ url: String(url), method: init?.method ?? "GET" });
    return new Response(
      JSON.stringify({
        schema_version: 1,
        receipt: {
          root: detail.node.id,
          deleted_nodes: [detail.node.id],
          deleted_edges: ["e1", "e2"],
          removed_vectors: [detail.node.id],
          executed_at: "2025-07-20T00:00:00.000Z",
        },
      }),
      { status: 200, headers: { "content-type": "application/json" } },
    );
  });
  const client = new PkgraphClient("http://test", fetchImpl as typeof fetch);
  const container = document.createElement("div");
  const deleted: string[] = [];
  const errors: string[] = [];
  const controller = new RedPenController(
    client,
    container,
    (receipt) => deleted.push(receipt.root),
    (message) => errors.push(message),
  );
  return { controller, container, calls, deleted, errors };
}

describe("RedPenController", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("is two-step: arming renders the evidence summary, not a request", () => {
    const { controller, container, calls } = makeController();
    const pending = controller.request(detail);
    expect(calls).toHaveLength(0);
    const dialog = container.querySelector(".red-pen-dialog")!;
    expect(dialog.getAttribute("data-token")).toBe(pending.token);
    expect(dialog.textContent).toContain("2 edge(s)");
    expect(dialog.textContent).toContain("1 source record(s)");
  });

  it("cancel disarms without issuing any request", async () => {
    const { controller, container, calls } = makeController();
    controller.request(detail);
    controller.cancel();
    expect(controller.pendingAction).toBeNull();
    expect(container.innerHTML).toBe("");
    expect(calls).toHaveLength(0);
    const result = await controller.confirm("stale-token");
    expect(result).toBeNull();
    expect(calls).toHaveLength(0);
  });

  it("confirm with the armed token deletes and renders the receipt", async () => {
    const { controller, container, calls, deleted } = makeController();
    const pending = controller.request(detail);
    const receipt = await controller.confirm(pending.token);
    expect(receipt).not.toBeNull();
    expect(calls).toEqual([
      { url: `http://test/node/${detail.node.id}`, method: "DELETE" },
    ]);
    expect(deleted).toEqual([detail.node.id]);
    const counts = Array.from(container.querySelectorAll("[data-removed]")).map(
      (el) => el.textContent,
    );
    expect(counts).toEqual(["1 nodes", "2 edges", "1 vectors"]);
  });

  it("a wrong token never deletes", async () => {
    const { controller, calls, errors } = makeController();
    controller.request(detail);
    const result = await controller.confirm("forged");
    expect(result).toBeNull();
    expect(calls).toHaveLength(0);
    expect(errors).toHaveLength(1);
  });
});
