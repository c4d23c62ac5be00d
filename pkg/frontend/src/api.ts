// Typed client over the pkgraph HTTP API. Every fact the UI renders comes
// through this module; nothing is synthesized client-side.

export interface NodeData {
  id: string;
  label: string;
  display_name: string;
  canonical_key: string;
  properties: Record<string, unknown>;
  valid_start: string | null;
  valid_end: string | null;
  provenance: string[];
  has_vector: boolean;
  created_at: string | null;
}

export interface EdgeData {
  id: string;
  src: string;
  dst: string;
  predicate: string;
  properties: Record<string, unknown>;
  provenance: string[];
}

export interface GraphResponse {
  nodes: NodeData[];
  edges: EdgeData[];
}

export interface StatsResponse {
  nodes: number;
  edges: number;
  vectors: number;
  records: number;
  communities_stale: boolean;
  [key: string]: unknown;
}

export interface AnswerData {
  text: string;
  citations: string[];
  refused: boolean;
  engine: string;
}

export interface SubgraphData {
  anchors: Array<{ id: string; score: number }>;
  nodes: NodeData[];
  hops: Record<string, number>;
  edges: EdgeData[];
  context: string;
  truncated: boolean;
}

export interface QueryResponse {
  answer: AnswerData;
  subgraph: SubgraphData;
  retrieval_ms: number;
  generation_ms: number;
}

export interface DeletionReceiptData {
  root: string;
  deleted_nodes: string[];
  deleted_edges: string[];
  removed_vectors: string[];
  executed_at: string;
}

export interface NodeDetailResponse {
  node: NodeData;
  edges: Array<{ edge: EdgeData; neighbor: NodeData }>;
  incident_edges: number;
  community: number | null;
}

export interface PartitionData {
  level: number;
  assignment: Record<string, number>;
  quality: number;
}

export interface QueryOptions {
  n_hops?: number;
  k_anchors?: number;
  include_communities?: boolean;
}

export class ServiceError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

type FetchLike = typeof fetch;

export class PkgraphClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, init);
    } catch (err) {
      throw new ServiceError(`service unreachable: ${String(err)}`, 0);
    }
    const body = (await response.json()) as T & {
      error?: { type: string; message: string };
    };
    if (!response.ok) {
      const message = body.error ? body.error.message : response.statusText;
      throw new ServiceError(message, response.status);
    }
    return body;
  }

  stats(): Promise<StatsResponse> {
    return this.request<StatsResponse>("/stats");
  }

  graph(labels?: string[]): Promise<GraphResponse> {
    const suffix = labels && labels.length ? `?label=${labels.join(",")}` : "";
    return this.request<GraphResponse>(`/graph${suffix}`);
  }

  node(id: string): Promise<NodeDetailResponse> {
    return this.request<NodeDetailResponse>(`/node/${id}`);
  }

  deleteNode(id: string): Promise<{ receipt: DeletionReceiptData }> {
    return this.request<{ receipt: DeletionReceiptData }>(`/node/${id}`, {
      method: "DELETE",
    });
  }

  query(question: string, options: QueryOptions = {}): Promise<QueryResponse> {
    return this.request<QueryResponse>("/query", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ question, ...options }),
    });
  }

  communities(level?: number): Promise<{ partitions: PartitionData[] }> {
    const suffix = level === undefined ? "" : `?level=${level}`;
    return this.request<{ partitions: PartitionData[] }>(`/communities${suffix}`);
  }

  ingestPath(path: string): Promise<{ reports: unknown[] }> {
    return this.request<{ reports: unknown[] }>("/ingest", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ path }),
    });
  }
}
