import { describe, expect, it, vi } from "vitest";

import { PkgraphClient, ServiceError } from "../src/api.js";

function clientWith(status: number, body: unknown) {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const fetchImpl = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
    calls.push({ url: String(url), init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  });
  return { client: new PkgraphClient("http://svc", fetchImpl as typeof fetch), calls };
}

describe("PkgraphClient", () => {
  it("builds query requests with options", async () => {
    const { client, calls } = clientWith(200, {
      answer: { text: "x", citations: [], refused: false, engine: "structured" },
      subgraph: { anchors: [], nodes: [], hops: {}, edges: [], context: "", truncated: false },
      retrieval_ms: 1,
      generation_ms: 0,
    });
    await client.query("when is it?", { n_hops: 1, k_anchors: 3 });
    expect(calls[0].url).toBe("http://svc/query");
    expect(JSON.parse(String(calls[0].init!.body))).toEqual({
      question: "when is it?",
      n_hops: 1,
      k_anchors: 3,
    });
  });

  it("encodes label filters and level params", async () => {
    const { client, calls } = clientWith(200, { nodes: [], edges: [], partitions: [] });
    await client.graph(["Person", "Event"]);
    await client.communities(0);
    expect(calls.map((c) => c.url)).toEqual([
      "http://svc/graph?label=Person,Event",
      "http://svc/communities?level=0",
    ]);
  });

  it("surfaces service error payloads with status", async () => {
    const { client } = clientWith(404, {
      error: { type: "UnknownNodeError", message: "no such node" },
    });
    await expect(client.node("00")).rejects.toThrowError(ServiceError);
    await expect(client.node("00")).rejects.toMatchObject({
      status: 404,
      message: "no such node",
    });
  });

  it("maps network failure to status 0 (unreachable)", async () => {
    const failing = vi.fn(async () => {
      throw new TypeError("connect ECONNREFUSED");
    });
    const client = new PkgraphClient("http://down", failing as unknown as typeof fetch);
    await expect(client.stats()).rejects.toMatchObject({ status: 0 });
  });
});
